/** Text shaping for values that arrive from the server.
 *
 * These helpers format; they never derive. Probabilities, marginals and
 * scores are rendered from response fields as-is.
 */
export function probabilityPercentText(probability) {
    return `${(probability * 100).toFixed(1)}%`;
}
export function contrastText(contrast) {
    return contrast > 0 ? `+${contrast}%` : `${contrast}%`;
}
/** mm:ss countdown; clamps at 0:00 once the deadline has passed. */
export function countdownText(remainingS) {
    const whole = Math.max(0, Math.ceil(remainingS));
    const minutes = Math.floor(whole / 60);
    const seconds = whole % 60;
    return `${minutes}:${String(seconds).padStart(2, "0")}`;
}
//# sourceMappingURL=format.js.map