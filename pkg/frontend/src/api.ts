/** Typed client for the service's HTTP/JSON endpoints.
 *
 * Every method resolves to the parsed response body and rejects with an
 * ApiError carrying the status code and the server's `detail` message.
 * Uploads beyond the service's size limit are rejected before any bytes
 * leave the browser.
 */

import type {
  AnswerResponse,
  Guess,
  HealthResponse,
  MatrixResponse,
  PredictResponse,
  SaliencyResponse,
  SessionResponse,
  SubmitResponse,
} from "./types.js";

// Mirrors the service default; the server still enforces its own limit.
export const MAX_UPLOAD_BYTES = 8 * 1024 * 1024;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly base: string = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let detail = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the generic message
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  private postJson<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  private imageForm(image: Blob, name: string, fields: Record<string, number>): FormData {
    if (image.size > MAX_UPLOAD_BYTES) {
      throw new ApiError(
        413,
        `file is ${image.size} bytes; the upload limit is ${MAX_UPLOAD_BYTES}`,
      );
    }
    const form = new FormData();
    form.append("image", image, name);
    for (const [key, value] of Object.entries(fields)) {
      form.append(key, String(value));
    }
    return form;
  }

  health(): Promise<HealthResponse> {
    return this.request("/api/health");
  }

  async predict(image: Blob, name: string, contrastPercent: number): Promise<PredictResponse> {
    const body = this.imageForm(image, name, { contrast_percent: contrastPercent });
    return this.request("/api/predict", { method: "POST", body });
  }

  async saliency(
    image: Blob,
    name: string,
    contrastPercent: number,
    k = 3,
  ): Promise<SaliencyResponse> {
    const body = this.imageForm(image, name, { contrast_percent: contrastPercent, k });
    return this.request("/api/saliency", { method: "POST", body });
  }

  createSession(aiKnowledge: string, humanKnowledge: string): Promise<SessionResponse> {
    return this.postJson("/api/turing/session", {
      ai_knowledge: aiKnowledge,
      human_knowledge: humanKnowledge,
    });
  }

  answer(sessionId: string, questionId: string, guess: Guess): Promise<AnswerResponse> {
    return this.postJson(`/api/turing/session/${sessionId}/answer`, {
      question_id: questionId,
      answer: guess,
    });
  }

  submit(sessionId: string): Promise<SubmitResponse> {
    return this.postJson(`/api/turing/session/${sessionId}/submit`, {});
  }

  matrix(): Promise<MatrixResponse> {
    return this.request("/api/turing/matrix");
  }
}
