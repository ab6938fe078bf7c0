/** Typed client for the service's HTTP/JSON endpoints.
 *
 * Every method resolves to the parsed response body and rejects with an
 * ApiError carrying the status code and the server's `detail` message.
 * Uploads beyond the service's size limit are rejected before any bytes
 * leave the browser.
 */
// Mirrors the service default; the server still enforces its own limit.
export const MAX_UPLOAD_BYTES = 8 * 1024 * 1024;
export class ApiError extends Error {
    status;
    constructor(status, detail) {
        super(detail);
        this.status = status;
        this.name = "ApiError";
    }
}
export class ApiClient {
    fetchImpl;
    base;
    constructor(fetchImpl = (url, init) => fetch(url, init), base = "") {
        this.fetchImpl = fetchImpl;
        this.base = base;
    }
    async request(path, init) {
        const response = await this.fetchImpl(this.base + path, init);
        if (!response.ok) {
            let detail = `request failed with status ${response.status}`;
            try {
                const body = (await response.json());
                if (typeof body.detail === "string")
                    detail = body.detail;
            }
            catch {
                // non-JSON error body; keep the generic message
            }
            throw new ApiError(response.status, detail);
        }
        return (await response.json());
    }
    postJson(path, body) {
        return this.request(path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    imageForm(image, name, fields) {
        if (image.size > MAX_UPLOAD_BYTES) {
            throw new ApiError(413, `file is ${image.size} bytes; the upload limit is ${MAX_UPLOAD_BYTES}`);
        }
        const form = new FormData();
        form.append("image", image, name);
        for (const [key, value] of Object.entries(fields)) {
            form.append(key, String(value));
        }
        return form;
    }
    health() {
        return this.request("/api/health");
    }
    async predict(image, name, contrastPercent) {
        const body = this.imageForm(image, name, { contrast_percent: contrastPercent });
        return this.request("/api/predict", { method: "POST", body });
    }
    async saliency(image, name, contrastPercent, k = 3) {
        const body = this.imageForm(image, name, { contrast_percent: contrastPercent, k });
        return this.request("/api/saliency", { method: "POST", body });
    }
    createSession(aiKnowledge, humanKnowledge) {
        return this.postJson("/api/turing/session", {
            ai_knowledge: aiKnowledge,
            human_knowledge: humanKnowledge,
        });
    }
    answer(sessionId, questionId, guess) {
        return this.postJson(`/api/turing/session/${sessionId}/answer`, {
            question_id: questionId,
            answer: guess,
        });
    }
    submit(sessionId) {
        return this.postJson(`/api/turing/session/${sessionId}/submit`, {});
    }
    matrix() {
        return this.request("/api/turing/matrix");
    }
}
//# sourceMappingURL=api.js.map