/** Contrast what-if probes over one uploaded image.
 *
 * A probe is one predict + saliency round trip at a slider position.
 * While a probe for a position is in flight, further requests for the same
 * position share the pending promise instead of issuing duplicates;
 * distinct positions run concurrently. Settled probes form the comparison
 * strip, keyed by position so re-probing replaces a card rather than
 * appending a duplicate.
 */
export function verdictKey(prediction) {
    return `${prediction.predicted_source} / ${prediction.predicted_style}`;
}
export class ProbeRunner {
    client;
    image;
    name;
    inflight = new Map();
    settled = new Map();
    constructor(client, image, name) {
        this.client = client;
        this.image = image;
        this.name = name;
    }
    /** Request a probe, deduplicating concurrent calls per slider position. */
    run(contrast) {
        const pending = this.inflight.get(contrast);
        if (pending)
            return pending;
        const probe = this.fetch(contrast).finally(() => {
            this.inflight.delete(contrast);
        });
        this.inflight.set(contrast, probe);
        return probe;
    }
    inflightCount() {
        return this.inflight.size;
    }
    /** Settled probes in completion order, one per distinct contrast. */
    history() {
        return [...this.settled.values()];
    }
    async fetch(contrast) {
        const [predict, saliency] = await Promise.all([
            this.client.predict(this.image, this.name, contrast),
            this.client.saliency(this.image, this.name, contrast),
        ]);
        const probe = { contrast, predict, saliency };
        this.settled.delete(contrast); // a re-probe moves its card to the end
        this.settled.set(contrast, probe);
        return probe;
    }
}
/** Suggest the next contrast to probe from where verdicts changed.
 *
 * The most informative next measurement sits between the closest pair of
 * settled probes that disagree. Returns null when every pair agrees or the
 * tightest disagreeing gap is already at slider resolution.
 */
export function suggestNextProbe(probes, step = 5) {
    const sorted = [...probes].sort((a, b) => a.contrast - b.contrast);
    let best = null;
    for (let i = 0; i + 1 < sorted.length; i += 1) {
        const low = sorted[i];
        const high = sorted[i + 1];
        if (verdictKey(low.predict) === verdictKey(high.predict))
            continue;
        if (best === null || high.contrast - low.contrast < best.high - best.low) {
            best = { low: low.contrast, high: high.contrast };
        }
    }
    if (best === null || best.high - best.low <= step)
        return null;
    return Math.round((best.low + best.high) / 2 / step) * step;
}
//# sourceMappingURL=probes.js.map