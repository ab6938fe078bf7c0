/** Small DOM construction helpers; no framework, no virtual DOM. */
export function el(tag, attrs = {}, children = []) {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
        if (key === "class")
            node.className = value;
        else if (key === "text")
            node.textContent = value;
        else
            node.setAttribute(key, value);
    }
    node.append(...children);
    return node;
}
export function clear(node) {
    while (node.firstChild)
        node.removeChild(node.firstChild);
}
//# sourceMappingURL=dom.js.map