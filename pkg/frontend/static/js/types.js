/** Server payload shapes, mirrored field for field from the JSON the
 * service emits. The client renders these values as received; it never
 * recomputes probabilities, marginals or scores on its own.
 */
export {};
//# sourceMappingURL=types.js.map