/** Verdict card rendering: a pure function of server JSON.
 *
 * Bars and gauges are sized directly from response probabilities, each
 * element also carrying the raw value in a data attribute so the displayed
 * numbers can be checked against the server's byte for byte. Legend colors
 * come from the saliency response verbatim.
 */
import { el } from "./dom.js";
import { contrastText, probabilityPercentText } from "./format.js";
import { verdictKey } from "./probes.js";
// Gauge axis order matches the service's source_marginals vector.
export const SOURCE_NAMES = ["Human", "Latent Diffusion", "Stable Diffusion"];
function cssColor(color) {
    return `rgb(${color.join(", ")})`;
}
export function renderVerdictCard(probe) {
    const { predict, saliency, contrast } = probe;
    const card = el("article", { class: "verdict-card", "data-contrast": String(contrast) });
    card.append(el("header", { class: "verdict-head" }, [
        el("h3", { class: "verdict-title", text: verdictKey(predict) }),
        el("span", { class: "contrast-tag", text: `contrast ${contrastText(contrast)}` }),
    ]));
    const topList = el("ol", { class: "top-entries" });
    for (const entry of predict.top_k) {
        const width = `${entry.probability * 100}%`;
        topList.append(el("li", { class: "top-entry", "data-probability": String(entry.probability) }, [
            el("span", { class: "entry-label", text: `${entry.source} / ${entry.style}` }),
            el("span", { class: "entry-bar" }, [
                el("span", { class: "entry-fill", style: `width: ${width}` }),
            ]),
            el("span", { class: "entry-percent", text: probabilityPercentText(entry.probability) }),
        ]));
    }
    card.append(topList);
    const gauge = el("div", { class: "source-gauge" });
    predict.source_marginals.forEach((marginal, index) => {
        gauge.append(el("div", {
            class: "gauge-segment",
            style: `flex-grow: ${marginal * 100}`,
            "data-source": SOURCE_NAMES[index] ?? `source ${index}`,
            "data-marginal": String(marginal),
            title: `${SOURCE_NAMES[index] ?? index}: ${probabilityPercentText(marginal)}`,
        }, [el("span", { class: "gauge-label", text: SOURCE_NAMES[index] ?? String(index) })]));
    });
    card.append(gauge);
    const legend = el("ol", { class: "legend" });
    for (const entry of saliency.legend) {
        legend.append(el("li", { class: "legend-entry", "data-rank": String(entry.rank) }, [
            el("span", {
                class: "legend-swatch",
                style: `background-color: ${cssColor(entry.color)}`,
                "data-color": entry.color.join(","),
            }),
            el("span", { class: "legend-label", text: `${entry.source} / ${entry.style}` }),
            el("span", {
                class: "legend-percent",
                text: probabilityPercentText(entry.probability),
            }),
        ]));
    }
    const overlayImage = el("img", {
        class: "overlay-image",
        alt: "saliency overlay",
        src: `data:image/png;base64,${saliency.overlay_png_base64}`,
    });
    card.append(el("figure", { class: "overlay" }, [overlayImage, legend]));
    card.append(el("footer", {
        class: "verdict-meta",
        text: `model ${predict.model_version} / mapping ${predict.mapping_version}`,
    }));
    return card;
}
//# sourceMappingURL=verdict.js.map