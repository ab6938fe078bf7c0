/** Quiz flow state: intake, 50 guesses against the countdown, submit, score.
 *
 * Phases move intake -> active -> submitted, with expired as the terminal
 * read-only state whenever the countdown hits zero first. Progress counts
 * come from the server's answer responses, and the score panel is rendered
 * from the submit response alone; truth labels reach the controller only
 * inside that response.
 */
import { ApiError } from "./api.js";
export const KNOWLEDGE_LEVELS = ["novice", "beginner", "advanced", "expert"];
export class QuizController {
    client;
    nowMs;
    onChange;
    phase = "intake";
    session = null;
    result = null;
    matrix = null;
    lastError = null;
    /** Guesses acknowledged by the server, keyed by question id. */
    answers = new Map();
    /** Count echoed by the server's latest answer response. */
    serverAnswered = 0;
    startedAtMs = 0;
    constructor(client, nowMs = () => Date.now(), onChange = () => { }) {
        this.client = client;
        this.nowMs = nowMs;
        this.onChange = onChange;
    }
    async start(aiKnowledge, humanKnowledge) {
        try {
            this.session = await this.client.createSession(aiKnowledge, humanKnowledge);
        }
        catch (error) {
            this.fail(error);
            return;
        }
        this.startedAtMs = this.nowMs();
        this.phase = "active";
        this.lastError = null;
        this.onChange();
    }
    remainingS() {
        if (this.session === null)
            return 0;
        return this.session.time_limit_s - (this.nowMs() - this.startedAtMs) / 1000;
    }
    /** Advance the countdown; flips into the read-only expired state at zero. */
    tick() {
        if (this.phase === "active" && this.remainingS() <= 0) {
            this.phase = "expired";
            this.onChange();
        }
    }
    answerable(questionId) {
        return this.phase === "active" && !this.answers.has(questionId);
    }
    /** Submit needs every question answered or explicitly skipped in time. */
    canSubmit() {
        return (this.phase === "active" &&
            this.session !== null &&
            this.serverAnswered === this.session.question_count);
    }
    async answer(questionId, guess) {
        if (!this.answerable(questionId) || this.session === null)
            return;
        let acknowledged;
        try {
            acknowledged = await this.client.answer(this.session.session_id, questionId, guess);
        }
        catch (error) {
            this.fail(error);
            return;
        }
        this.answers.set(questionId, guess);
        // responses may settle out of order; progress only moves forward
        this.serverAnswered = Math.max(this.serverAnswered, acknowledged.answered);
        this.lastError = null;
        this.onChange();
    }
    async submit() {
        if (!this.canSubmit() || this.session === null)
            return;
        let result;
        try {
            result = await this.client.submit(this.session.session_id);
        }
        catch (error) {
            this.fail(error);
            return;
        }
        this.result = result;
        this.phase = "submitted";
        this.lastError = null;
        this.onChange();
        try {
            this.matrix = await this.client.matrix();
        }
        catch {
            this.matrix = null; // the score panel stands on its own
        }
        this.onChange();
    }
    fail(error) {
        this.lastError = error instanceof Error ? error.message : String(error);
        if (error instanceof ApiError && error.status === 410) {
            this.phase = "expired";
        }
        this.onChange();
    }
}
//# sourceMappingURL=quiz.js.map