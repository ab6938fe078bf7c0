/** Page wiring: the analyze view (upload, contrast probes, comparison
 * strip) and the quiz view (intake, 50 questions, countdown, score).
 *
 * All state lives in ProbeRunner and QuizController; this module only maps
 * DOM events onto them and their JSON-backed state onto DOM. The wall
 * clock and the API client are injectable so browser flows can run against
 * a double with simulated time.
 */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { countdownText } from "./format.js";
import { Probe, ProbeRunner, suggestNextProbe, verdictKey } from "./probes.js";
import { KNOWLEDGE_LEVELS, QuizController } from "./quiz.js";
import type { Guess } from "./types.js";
import { renderVerdictCard } from "./verdict.js";

export interface AppOptions {
  client?: ApiClient;
  nowMs?: () => number;
  /** Countdown refresh period; 0 disables the built-in interval timer. */
  tickMs?: number;
}

export interface AppHandle {
  quiz: QuizController;
  /** Advance the countdown once; the interval timer calls this. */
  tick(): void;
  dispose(): void;
}

const GUESS_LABELS: { guess: Guess; label: string }[] = [
  { guess: "human", label: "Human" },
  { guess: "machine", label: "Machine" },
  { guess: "skip", label: "Skip" },
];

export function mountApp(root: HTMLElement, options: AppOptions = {}): AppHandle {
  const client = options.client ?? new ApiClient();
  const nowMs = options.nowMs ?? (() => Date.now());

  clear(root);
  root.append(
    el("header", { class: "app-header" }, [
      el("h1", { text: "artbrain" }),
      el("nav", { class: "tabs" }, [
        el("button", { id: "tab-analyze", class: "tab active", text: "Analyze" }),
        el("button", { id: "tab-quiz", class: "tab", text: "Quiz" }),
      ]),
      el("span", { id: "model-version", class: "model-version" }),
    ]),
  );

  const analyzeView = el("section", { id: "analyze-view" });
  const quizView = el("section", { id: "quiz-view", hidden: "" });
  root.append(analyzeView, quizView);

  const tabAnalyze = root.querySelector<HTMLButtonElement>("#tab-analyze")!;
  const tabQuiz = root.querySelector<HTMLButtonElement>("#tab-quiz")!;
  function showTab(which: "analyze" | "quiz"): void {
    analyzeView.hidden = which !== "analyze";
    quizView.hidden = which !== "quiz";
    tabAnalyze.classList.toggle("active", which === "analyze");
    tabQuiz.classList.toggle("active", which === "quiz");
  }
  tabAnalyze.addEventListener("click", () => showTab("analyze"));
  tabQuiz.addEventListener("click", () => showTab("quiz"));

  client
    .health()
    .then((health) => {
      const label = root.querySelector("#model-version")!;
      label.textContent =
        health.model_version === null ? "no model loaded" : `model ${health.model_version}`;
    })
    .catch(() => {});

  // ---------------- analyze view ----------------

  const errorBanner = el("div", { id: "analyze-error", class: "error-banner", hidden: "" });
  const fileInput = el("input", {
    id: "upload",
    type: "file",
    accept: "image/png,image/jpeg",
  });
  const slider = el("input", {
    id: "contrast",
    type: "range",
    min: "-100",
    max: "100",
    step: "5",
    value: "0",
    disabled: "",
  });
  const sliderValue = el("output", { id: "contrast-value", text: "0%" });
  const suggestion = el("button", { id: "probe-suggestion", class: "suggestion", hidden: "" });
  const currentCard = el("div", { id: "current-verdict" });
  const strip = el("div", { id: "probe-strip", class: "probe-strip" });

  analyzeView.append(
    errorBanner,
    el("div", { class: "upload-row" }, [
      el("label", { for: "upload", text: "Artwork (PNG or JPEG): " }),
      fileInput,
    ]),
    el("div", { class: "contrast-row" }, [
      el("label", { for: "contrast", text: "Contrast " }),
      slider,
      sliderValue,
      suggestion,
    ]),
    currentCard,
    el("h2", { class: "strip-title", text: "Probe history", hidden: "" }),
    strip,
  );
  const stripTitle = analyzeView.querySelector<HTMLElement>(".strip-title")!;

  let runner: ProbeRunner | null = null;
  let current: Probe | null = null;

  function showError(error: unknown): void {
    errorBanner.textContent = error instanceof Error ? error.message : String(error);
    errorBanner.hidden = false;
  }

  function renderAnalyze(): void {
    errorBanner.hidden = true;
    clear(currentCard);
    if (current !== null) currentCard.append(renderVerdictCard(current));

    const history = runner === null ? [] : runner.history();
    clear(strip);
    stripTitle.hidden = history.length < 2;
    const baseline = history.find((probe) => probe.contrast === 0) ?? history[0];
    for (const probe of history) {
      const card = renderVerdictCard(probe);
      card.classList.add("strip-card");
      if (baseline && verdictKey(probe.predict) !== verdictKey(baseline.predict)) {
        card.classList.add("changed");
      }
      strip.append(card);
    }

    const next = suggestNextProbe(history);
    suggestion.hidden = next === null;
    if (next !== null) {
      suggestion.dataset["suggestion"] = String(next);
      suggestion.textContent = `Verdict changes nearby; probe ${next}% next`;
    }
  }

  function probe(contrast: number): void {
    if (runner === null) return;
    const owner = runner;
    owner.run(contrast).then(
      (settled) => {
        if (owner !== runner) return; // a new upload superseded this probe
        current = settled;
        renderAnalyze();
      },
      (error) => {
        if (owner === runner) showError(error);
      },
    );
  }

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    runner = new ProbeRunner(client, file, file.name);
    current = null;
    slider.value = "0";
    sliderValue.textContent = "0%";
    slider.disabled = false;
    renderAnalyze();
    probe(0);
  });

  slider.addEventListener("input", () => {
    sliderValue.textContent = `${slider.value}%`;
  });
  slider.addEventListener("change", () => {
    probe(Number(slider.value));
  });
  suggestion.addEventListener("click", () => {
    const next = Number(suggestion.dataset["suggestion"]);
    if (Number.isNaN(next)) return;
    slider.value = String(next);
    sliderValue.textContent = `${next}%`;
    probe(next);
  });

  // ---------------- quiz view ----------------

  const quiz = new QuizController(client, nowMs, () => renderQuiz());
  let builtForSession: string | null = null;
  let questionList: HTMLOListElement | null = null;

  function buildIntake(): void {
    clear(quizView);
    const levelOptions = () =>
      KNOWLEDGE_LEVELS.map((level) =>
        el("option", { value: level, text: level.charAt(0).toUpperCase() + level.slice(1) }),
      );
    const aiSelect = el("select", { id: "ai-knowledge" }, levelOptions());
    const humanSelect = el("select", { id: "human-knowledge" }, levelOptions());
    const start = el("button", { id: "quiz-start", text: "Start the 20 minute quiz" });
    start.addEventListener("click", () => {
      void quiz.start(aiSelect.value, humanSelect.value);
    });
    quizView.append(
      el("p", {
        class: "quiz-blurb",
        text:
          "50 artworks, half drawn by people and half machine-generated. " +
          "Guess the origin of each within 20 minutes.",
      }),
      el("div", { class: "intake-row" }, [
        el("label", { for: "ai-knowledge", text: "Knowledge of AI-generated art " }),
        aiSelect,
      ]),
      el("div", { class: "intake-row" }, [
        el("label", { for: "human-knowledge", text: "Knowledge of human art " }),
        humanSelect,
      ]),
      start,
      el("div", { id: "quiz-error", class: "error-banner", hidden: "" }),
    );
  }

  function buildQuestionList(): void {
    const session = quiz.session!;
    clear(quizView);
    questionList = el("ol", { id: "quiz-questions", class: "quiz-questions" });
    session.questions.forEach((question, index) => {
      const buttons = GUESS_LABELS.map(({ guess, label }) => {
        const button = el("button", {
          class: `guess guess-${guess}`,
          "data-question": question.question_id,
          "data-guess": guess,
          text: label,
        });
        button.addEventListener("click", () => {
          void quiz.answer(question.question_id, guess);
        });
        return button;
      });
      questionList!.append(
        el("li", { class: "quiz-question", "data-question": question.question_id }, [
          el("span", { class: "question-number", text: `#${index + 1}` }),
          el("img", {
            class: "question-image",
            src: question.image_url,
            alt: `artwork ${index + 1}`,
          }),
          el("span", { class: "question-buttons" }, buttons),
        ]),
      );
    });
    quizView.append(
      el("div", { class: "quiz-header" }, [
        el("span", { id: "quiz-countdown", class: "countdown" }),
        el("span", { id: "quiz-progress", class: "progress" }),
      ]),
      el("div", { id: "quiz-banner", class: "quiz-banner", hidden: "" }),
      el("div", { id: "quiz-error", class: "error-banner", hidden: "" }),
      questionList,
      el("button", { id: "quiz-submit", text: "Submit answers", disabled: "" }),
    );
    builtForSession = session.session_id;
    quizView.querySelector("#quiz-submit")!.addEventListener("click", () => {
      void quiz.submit();
    });
    updateCountdown();
  }

  function updateQuestionControls(): void {
    if (questionList === null) return;
    const readOnly = quiz.phase !== "active";
    for (const button of questionList.querySelectorAll<HTMLButtonElement>("button.guess")) {
      const questionId = button.dataset["question"]!;
      const chosen = quiz.answers.get(questionId);
      button.disabled = readOnly || chosen !== undefined;
      button.classList.toggle("selected", chosen === button.dataset["guess"]);
    }
    const progress = quizView.querySelector("#quiz-progress");
    if (progress && quiz.session) {
      progress.textContent = `${quiz.serverAnswered} / ${quiz.session.question_count} answered`;
    }
    const submit = quizView.querySelector<HTMLButtonElement>("#quiz-submit");
    if (submit) submit.disabled = !quiz.canSubmit();
    const banner = quizView.querySelector<HTMLElement>("#quiz-banner");
    if (banner) {
      banner.hidden = quiz.phase !== "expired";
      if (quiz.phase === "expired") {
        banner.textContent =
          "Time is up. The session is now read-only: answers can no longer be " +
          "recorded and the quiz cannot be submitted.";
      }
    }
    const errorBox = quizView.querySelector<HTMLElement>("#quiz-error");
    if (errorBox) {
      errorBox.hidden = quiz.lastError === null;
      errorBox.textContent = quiz.lastError ?? "";
    }
  }

  function buildScorePanel(): void {
    const result = quiz.result!;
    clear(quizView);
    questionList = null;
    const review = el("ol", { class: "review" });
    result.review.forEach((entry, index) => {
      const hit = entry.answer === entry.truth;
      review.append(
        el("li", { class: `review-entry ${hit ? "correct" : "incorrect"}` }, [
          el("span", { class: "question-number", text: `#${index + 1}` }),
          el("span", { class: "review-guess", text: `you said ${entry.answer}` }),
          el("span", { class: "review-truth", text: `it was ${entry.truth}` }),
        ]),
      );
    });
    quizView.append(
      el("div", { id: "quiz-score", class: "score-panel" }, [
        el("h2", { text: "Your score" }),
        el("p", { class: "score-headline", text: `${result.correct} / ${result.total}` }),
        el("p", { class: "score-percent", text: `${result.percent}%` }),
        el("p", {
          class: "score-elapsed",
          text: `finished in ${Math.round(result.elapsed_s)} s`,
        }),
      ]),
      el("h3", { text: "Review" }),
      review,
      el("div", { id: "quiz-matrix" }),
    );
    renderMatrix();
  }

  function renderMatrix(): void {
    const box = quizView.querySelector<HTMLElement>("#quiz-matrix");
    if (!box || quiz.matrix === null) return;
    clear(box);
    const table = el("table", { class: "matrix" });
    table.append(
      el("tr", {}, [
        el("th", { text: "Human-art knowledge" }),
        el("th", { text: "AI-art knowledge" }),
        el("th", { text: "Respondents" }),
        el("th", { text: "Accuracy %" }),
      ]),
    );
    for (const cell of quiz.matrix.cells) {
      table.append(
        el("tr", {}, [
          el("td", { text: cell.human_knowledge }),
          el("td", { text: cell.ai_knowledge }),
          el("td", { text: String(cell.count) }),
          el("td", { text: String(cell.accuracy_percent) }),
        ]),
      );
    }
    const overall = quiz.matrix.overall;
    table.append(
      el("tr", { class: "matrix-overall" }, [
        el("td", { text: "Overall" }),
        el("td", { text: "" }),
        el("td", { text: String(overall.count) }),
        el("td", { text: overall.accuracy_percent === null ? "-" : String(overall.accuracy_percent) }),
      ]),
    );
    box.append(el("h3", { text: "All respondents so far" }), table);
    if (quiz.matrix.model !== null) {
      const model = quiz.matrix.model;
      box.append(
        el("p", {
          class: "matrix-model",
          text: `The model on the same pool: ${model.correct} / ${model.total} (${model.percent}%)`,
        }),
      );
    }
  }

  function updateCountdown(): void {
    const countdown = quizView.querySelector<HTMLElement>("#quiz-countdown");
    if (countdown) countdown.textContent = countdownText(quiz.remainingS());
  }

  function renderQuiz(): void {
    if (quiz.phase === "intake") {
      buildIntake();
      const errorBox = quizView.querySelector<HTMLElement>("#quiz-error");
      if (errorBox && quiz.lastError !== null) {
        errorBox.hidden = false;
        errorBox.textContent = quiz.lastError;
      }
      return;
    }
    if (quiz.phase === "submitted") {
      buildScorePanel();
      return;
    }
    // active or expired
    if (quiz.session && builtForSession !== quiz.session.session_id) buildQuestionList();
    updateQuestionControls();
  }

  buildIntake();

  function tick(): void {
    quiz.tick();
    updateCountdown();
  }

  const tickMs = options.tickMs ?? 500;
  const timer = tickMs > 0 ? setInterval(tick, tickMs) : null;

  return {
    quiz,
    tick,
    dispose(): void {
      if (timer !== null) clearInterval(timer);
      clear(root);
    },
  };
}
