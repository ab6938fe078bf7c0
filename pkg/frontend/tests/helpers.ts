/** Shared DOM test plumbing. */

export async function flush(times = 3): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

/** Poll until the probe returns a truthy value; throws after `tries`. */
export async function waitFor<T>(probe: () => T | null | undefined | false, tries = 50): Promise<T> {
  for (let i = 0; i < tries; i += 1) {
    const value = probe();
    if (value) return value;
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
  throw new Error("condition not reached before the polling budget ran out");
}

export function makeFile(content: string, name = "artwork.png", type = "image/png"): File {
  return new File([content], name, { type });
}

/** jsdom file inputs have no picker; install the selection directly. */
export function selectFile(input: HTMLInputElement, file: File): void {
  Object.defineProperty(input, "files", { value: [file], configurable: true });
  input.dispatchEvent(new Event("change", { bubbles: true }));
}

export function setSlider(slider: HTMLInputElement, value: number): void {
  slider.value = String(value);
  slider.dispatchEvent(new Event("input", { bubbles: true }));
  slider.dispatchEvent(new Event("change", { bubbles: true }));
}

export function click(element: Element | null): void {
  if (element === null) throw new Error("expected an element to click");
  (element as HTMLElement).click();
}

export function text(element: Element | null): string {
  return element?.textContent ?? "";
}
