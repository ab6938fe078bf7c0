/** End-to-end browser flows against a faithful service double.
 *
 * Covers the two journeys the page exists for: upload -> verdict card ->
 * contrast probes (a crafted image flips its verdict at -100), and the
 * 50-question quiz with the 20 minute deadline, where the displayed score
 * must match the server's arithmetic and no truth label may cross the wire
 * before submit.
 */

import { afterEach, describe, expect, test } from "vitest";

import { mountApp, type AppHandle } from "../src/app.js";
import { ApiClient } from "../src/api.js";
import type { Guess } from "../src/types.js";
import { FakeServer, predictPayload } from "./fake-server.js";
import { click, flush, makeFile, selectFile, setSlider, text, waitFor } from "./helpers.js";

const FLIP_MARKER = "flips-under-contrast";

/** Crafted fixture: reads as human art until contrast drops to -75 or below. */
function flipVerdicts(imageText: string, contrast: number) {
  if (imageText.includes(FLIP_MARKER) && contrast <= -75) {
    return predictPayload({ sourceIndex: 2, styleIndex: 9, contrast });
  }
  return predictPayload({ sourceIndex: 0, styleIndex: 1, contrast });
}

const mounted: AppHandle[] = [];

function setup(options: { verdictFor?: FakeServer["verdictFor"]; client?: ApiClient } = {}) {
  const fake = new FakeServer();
  if (options.verdictFor) fake.verdictFor = options.verdictFor;
  const clock = { ms: 5_000_000_000 };
  const advance = (seconds: number) => {
    clock.ms += seconds * 1000;
    fake.advance(seconds);
  };
  const root = document.createElement("div");
  document.body.append(root);
  const handle = mountApp(root, {
    client: options.client ?? new ApiClient(fake.fetch),
    nowMs: () => clock.ms,
    tickMs: 0,
  });
  mounted.push(handle);
  return { fake, advance, root, handle };
}

afterEach(() => {
  while (mounted.length > 0) mounted.pop()!.dispose();
  document.body.innerHTML = "";
});

function uploadInput(root: HTMLElement): HTMLInputElement {
  return root.querySelector<HTMLInputElement>("#upload")!;
}

function slider(root: HTMLElement): HTMLInputElement {
  return root.querySelector<HTMLInputElement>("#contrast")!;
}

function currentCard(root: HTMLElement): HTMLElement | null {
  return root.querySelector<HTMLElement>("#current-verdict .verdict-card");
}

async function startQuiz(root: HTMLElement, ai: string, human: string): Promise<void> {
  click(root.querySelector("#tab-quiz"));
  root.querySelector<HTMLSelectElement>("#ai-knowledge")!.value = ai;
  root.querySelector<HTMLSelectElement>("#human-knowledge")!.value = human;
  click(root.querySelector("#quiz-start"));
  await waitFor(() => root.querySelectorAll("li.quiz-question").length === 50);
}

async function answerAll(root: HTMLElement, guessAt: (index: number) => Guess): Promise<Guess[]> {
  const rows = [...root.querySelectorAll("li.quiz-question")];
  const guesses: Guess[] = [];
  rows.forEach((row, index) => {
    const guess = guessAt(index);
    guesses.push(guess);
    click(row.querySelector(`button.guess-${guess}`));
  });
  await waitFor(() => text(root.querySelector("#quiz-progress")) === "50 / 50 answered");
  return guesses;
}

describe("analyze flow", () => {
  test("upload renders a verdict card straight from the server JSON", async () => {
    const { root } = setup({ verdictFor: flipVerdicts });
    expect(slider(root).disabled).toBe(true);

    selectFile(uploadInput(root), makeFile(FLIP_MARKER, "crafted.png"));
    const card = await waitFor(() => currentCard(root));

    const expected = predictPayload({ sourceIndex: 0, styleIndex: 1, contrast: 0 });
    expect(text(card.querySelector(".verdict-title"))).toBe("Human / Baroque");
    expect(text(card.querySelector(".contrast-tag"))).toBe("contrast 0%");

    // displayed probabilities are the server's numbers, byte for byte
    const entries = [...card.querySelectorAll<HTMLElement>(".top-entry")];
    expect(entries.length).toBe(3);
    entries.forEach((entry, rank) => {
      expect(Number(entry.dataset["probability"])).toBe(expected.top_k[rank]!.probability);
      const fill = entry.querySelector<HTMLElement>(".entry-fill")!;
      expect(fill.getAttribute("style")).toBe(
        `width: ${expected.top_k[rank]!.probability * 100}%`,
      );
    });
    const displayedSum = entries.reduce((a, e) => a + Number(e.dataset["probability"]), 0);
    expect(displayedSum).toBe(expected.top_k.reduce((a, e) => a + e.probability, 0));

    // source gauge carries the marginals verbatim
    const segments = [...card.querySelectorAll<HTMLElement>(".gauge-segment")];
    expect(segments.map((s) => s.dataset["source"])).toEqual([
      "Human",
      "Latent Diffusion",
      "Stable Diffusion",
    ]);
    segments.forEach((segment, index) => {
      expect(Number(segment.dataset["marginal"])).toBe(expected.source_marginals[index]);
    });

    // legend colors and order match the top-3, as served
    const swatches = [...card.querySelectorAll<HTMLElement>(".legend-swatch")];
    expect(swatches.map((s) => s.dataset["color"])).toEqual([
      "220,38,38",
      "37,99,235",
      "22,163,74",
    ]);
    const legendLabels = [...card.querySelectorAll(".legend-label")].map((n) => text(n));
    expect(legendLabels).toEqual(expected.top_k.map((e) => `${e.source} / ${e.style}`));
    expect(card.querySelector<HTMLImageElement>(".overlay-image")!.src).toContain(
      "data:image/png;base64,",
    );
    expect(slider(root).disabled).toBe(false);
  });

  test("a contrast probe at -100 changes the verdict on the crafted image", async () => {
    const { root, fake } = setup({ verdictFor: flipVerdicts });
    selectFile(uploadInput(root), makeFile(FLIP_MARKER, "crafted.png"));
    await waitFor(() => currentCard(root));
    const baselineHtml = currentCard(root)!.innerHTML;

    // two slider drops to -100 in the same tick share one in-flight probe
    setSlider(slider(root), -100);
    setSlider(slider(root), -100);
    await waitFor(() => text(currentCard(root)?.querySelector(".verdict-title") ?? null) ===
      "Stable Diffusion / Ukiyo-e");
    const predictsAtMinus100 = fake.log.filter(
      (entry) => entry.url === "/api/predict" && entry.body.includes('"contrast_percent":-100'),
    );
    expect(predictsAtMinus100.length).toBe(1);

    // the comparison strip keeps both probes and flags the changed verdict
    let strip = [...root.querySelectorAll<HTMLElement>("#probe-strip .strip-card")];
    expect(strip.length).toBe(2);
    const changed = strip.find((card) => card.dataset["contrast"] === "-100")!;
    expect(changed.classList.contains("changed")).toBe(true);
    expect(strip.find((c) => c.dataset["contrast"] === "0")!.classList.contains("changed")).toBe(
      false,
    );

    // the flip between -100 and 0 suggests probing the midpoint next
    const suggestion = root.querySelector<HTMLElement>("#probe-suggestion")!;
    expect(suggestion.hidden).toBe(false);
    expect(suggestion.dataset["suggestion"]).toBe("-50");

    // back at 0 the verdict is identical to the initial upload
    setSlider(slider(root), 0);
    await waitFor(() => currentCard(root)?.getAttribute("data-contrast") === "0");
    expect(currentCard(root)!.innerHTML).toBe(baselineHtml);

    // three probes at -100/0/+100 leave three cards in the strip
    setSlider(slider(root), 100);
    await waitFor(
      () => root.querySelectorAll("#probe-strip .strip-card").length === 3,
    );
    strip = [...root.querySelectorAll<HTMLElement>("#probe-strip .strip-card")];
    expect(new Set(strip.map((card) => card.dataset["contrast"]))).toEqual(
      new Set(["-100", "0", "100"]),
    );
  });

  test("server errors surface inline", async () => {
    const failing = new ApiClient(async () =>
      new Response(JSON.stringify({ detail: "rate limit exceeded" }), {
        status: 429,
        headers: { "content-type": "application/json" },
      }),
    );
    const { root } = setup({ client: failing });
    selectFile(uploadInput(root), makeFile("whatever"));
    const banner = await waitFor(() => {
      const node = root.querySelector<HTMLElement>("#analyze-error");
      return node && !node.hidden ? node : null;
    });
    expect(text(banner)).toContain("rate limit exceeded");
  });
});

describe("quiz flow", () => {
  test("completes 50 answers and the submitted score matches the server arithmetic", async () => {
    const { root, fake, advance } = setup();
    await startQuiz(root, "expert", "novice");

    // fresh session: 50 images served from the session's own URLs
    const session = [...fake.sessions.values()][0]!;
    const images = [...root.querySelectorAll<HTMLImageElement>("img.question-image")];
    expect(images.length).toBe(50);
    images.forEach((image, index) => {
      expect(image.getAttribute("src")).toBe(
        `/api/turing/session/${session.id}/image/q${String(index).padStart(2, "0")}`,
      );
    });
    expect(text(root.querySelector("#quiz-countdown"))).toBe("20:00");

    // submit stays gated until every question is answered or skipped
    const submit = root.querySelector<HTMLButtonElement>("#quiz-submit")!;
    expect(submit.disabled).toBe(true);
    const guesses = await answerAll(root, (index) => {
      if (index % 7 === 3) return "skip";
      return index % 2 === 0 ? "human" : "machine";
    });
    expect(submit.disabled).toBe(false);

    // the test recomputes the expected score from the server-side truth
    const truth = fake.truthOf(session.id);
    const expectedCorrect = guesses.filter((guess, index) => guess === truth[index]).length;
    expect(expectedCorrect).toBeGreaterThan(0); // fixture sanity
    advance(321);

    click(submit);
    const panel = await waitFor(() => root.querySelector("#quiz-score"));
    expect(text(panel.querySelector(".score-headline"))).toBe(`${expectedCorrect} / 50`);
    // out of 50 questions, the exact percentage is always 2 * correct
    expect(text(panel.querySelector(".score-percent"))).toBe(`${2 * expectedCorrect}.0%`);
    expect(text(panel.querySelector(".score-elapsed"))).toBe("finished in 321 s");

    // the review lists all 50 with the skip visible as a forfeited guess
    const reviewRows = [...root.querySelectorAll("li.review-entry")];
    expect(reviewRows.length).toBe(50);
    expect(text(reviewRows[3]!)).toContain("you said skip");
    expect(reviewRows[3]!.classList.contains("incorrect")).toBe(true);

    // the aggregate matrix reflects this one submission
    await waitFor(() => root.querySelector(".matrix"));
    const cellRow = [...root.querySelectorAll(".matrix tr")][1]!;
    const cellText = [...cellRow.querySelectorAll("td")].map((n) => text(n));
    expect(cellText).toEqual(["Novice", "Expert", "1", `${2 * expectedCorrect}`]);
    expect(text(root.querySelector(".matrix-overall td:last-child"))).toBe(
      `${2 * expectedCorrect}`,
    );
    expect(text(root.querySelector(".matrix-model"))).toContain("41 / 50 (82.0%)");
  });

  test("enforces the 1200 s deadline as a read-only state", async () => {
    const { root, fake, advance, handle } = setup();
    await startQuiz(root, "novice", "novice");
    const rows = [...root.querySelectorAll("li.quiz-question")];
    click(rows[0]!.querySelector("button.guess-human"));
    await waitFor(() => text(root.querySelector("#quiz-progress")) === "1 / 50 answered");

    advance(1201);
    handle.tick();

    expect(text(root.querySelector("#quiz-countdown"))).toBe("0:00");
    const banner = root.querySelector<HTMLElement>("#quiz-banner")!;
    expect(banner.hidden).toBe(false);
    expect(text(banner)).toContain("read-only");
    expect(root.querySelector<HTMLButtonElement>("#quiz-submit")!.disabled).toBe(true);
    for (const button of root.querySelectorAll<HTMLButtonElement>("button.guess")) {
      expect(button.disabled).toBe(true);
    }

    // expired answers never reach the network; the client gate holds
    const requestsBefore = fake.log.length;
    click(rows[1]!.querySelector("button.guess-machine"));
    await flush();
    expect(fake.log.length).toBe(requestsBefore);
    expect(text(root.querySelector("#quiz-progress"))).toBe("1 / 50 answered");
  });

  test("truth labels stay server-side until submit", async () => {
    const { root, fake } = setup();
    await startQuiz(root, "beginner", "advanced");
    await answerAll(root, () => "human");

    // everything the client has seen so far is free of truth labels
    expect(fake.log.length).toBeGreaterThan(50);
    for (const exchange of fake.log) {
      expect(exchange.body).not.toContain('"truth"');
    }

    click(root.querySelector("#quiz-submit"));
    await waitFor(() => root.querySelector("#quiz-score"));
    const submitExchange = fake.log.find((entry) => entry.url.endsWith("/submit"))!;
    expect(submitExchange.body).toContain('"truth"');
  });
});
