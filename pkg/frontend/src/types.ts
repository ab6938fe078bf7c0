/** Server payload shapes, mirrored field for field from the JSON the
 * service emits. The client renders these values as received; it never
 * recomputes probabilities, marginals or scores on its own.
 */

export interface TopEntry {
  class_index: number;
  style: string;
  source: string;
  probability: number;
}

export interface PredictResponse {
  top_k: TopEntry[];
  probs: number[];
  style_marginals: number[];
  source_marginals: number[];
  predicted_source: string;
  predicted_style: string;
  contrast_percent: number;
  model_version: string;
  mapping_version: string;
}

export interface LegendEntry {
  class_index: number;
  style: string;
  source: string;
  color: number[]; // [r, g, b]
  rank: number;
  probability: number;
}

export interface SaliencyResponse {
  legend: LegendEntry[];
  overlay_png_base64: string;
  prediction: PredictResponse;
  alpha: number;
}

export interface SessionQuestion {
  question_id: string;
  image_url: string;
}

export interface SessionResponse {
  session_id: string;
  time_limit_s: number;
  question_count: number;
  questions: SessionQuestion[];
}

export interface AnswerResponse {
  answered: number;
}

export interface ReviewEntry {
  question_id: string;
  answer: string;
  truth: string;
}

export interface SubmitResponse {
  correct: number;
  total: number;
  accuracy: number;
  percent: string;
  elapsed_s: number;
  review: ReviewEntry[];
}

export interface MatrixCell {
  human_knowledge: string;
  ai_knowledge: string;
  count: number;
  accuracy_percent: number;
}

export interface MatrixResponse {
  cells: MatrixCell[];
  overall: { count: number; accuracy_percent: number | null };
  model: { correct: number; total: number; percent: string } | null;
}

export interface HealthResponse {
  status: string;
  model_version: string | null;
}

export type Guess = "human" | "machine" | "skip";
