/** DOM layer: question cards, MOST/LEAST selectors, feedback banners.
 *
 * All tweet content is written through textContent, never innerHTML, so
 * displayed text is inert.  While a submission is in flight the controls are
 * disabled; a network failure keeps the current selection and shows a retry
 * button instead of losing state.
 */

import { ApiClient, NetworkError, RejectedError } from "./client";
import { Question, SubmitOutcome } from "./protocol";
import {
  Selection,
  buildSubmission,
  canSubmit,
  emptySelection,
  keyToAction,
  selectLeast,
  selectMost,
} from "./selection";

export interface UiCallbacks {
  onTerminal?: (state: "complete" | "rejected") => void;
}

export class AnnotationView {
  private selection: Selection = emptySelection;
  private question: Question | null = null;
  private busy = false;
  private keyHandler: (event: KeyboardEvent) => void;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private sessionId: string,
    private annotatorId: string,
    private callbacks: UiCallbacks = {},
  ) {
    this.keyHandler = (event) => this.handleKey(event);
    root.ownerDocument.addEventListener("keydown", this.keyHandler);
  }

  dispose(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private handleKey(event: KeyboardEvent): void {
    if (this.busy || !this.question) {
      return;
    }
    if (event.key === "Enter") {
      void this.submit();
      return;
    }
    const action = keyToAction(event.code, event.shiftKey);
    if (!action || action.index >= this.question.speakers.length) {
      return;
    }
    this.selection =
      action.kind === "most"
        ? selectMost(this.selection, action.index)
        : selectLeast(this.selection, action.index);
    this.render();
  }

  private async loadNext(): Promise<void> {
    this.busy = true;
    this.render();
    try {
      const next = await this.client.nextQuestion(this.sessionId, this.annotatorId);
      if (next.done) {
        this.question = null;
        this.renderTerminal(
          "Session complete",
          "Every question assigned to you has been answered. Thank you!",
        );
        this.callbacks.onTerminal?.("complete");
        return;
      }
      this.question = next;
      this.selection = emptySelection;
      this.busy = false;
      this.render();
    } catch (err) {
      this.handleError(err, () => this.loadNext());
    }
  }

  private async submit(): Promise<void> {
    if (!this.question || this.busy) {
      return;
    }
    const submission = buildSubmission(this.selection, this.question, this.annotatorId);
    if (!submission) {
      return; // incomplete or equal selections never leave the client
    }
    this.busy = true;
    this.render();
    try {
      const outcome = await this.client.submit(this.sessionId, submission);
      this.afterOutcome(outcome);
    } catch (err) {
      this.handleError(err, () => this.submit());
    }
  }

  private afterOutcome(outcome: SubmitOutcome): void {
    if (outcome.outcome === "rejected") {
      this.question = null;
      this.renderTerminal(
        "Annotation stopped",
        outcome.explanation ??
          "Accuracy on the check questions fell below the required level.",
      );
      this.callbacks.onTerminal?.("rejected");
      return;
    }
    const banner =
      outcome.outcome === "gold"
        ? outcome.correct
          ? { kind: "good", text: "Check question: your answer was correct." }
          : { kind: "bad", text: "Check question: your answer was not correct." }
        : null;
    void this.loadNextWithBanner(banner);
  }

  private async loadNextWithBanner(
    banner: { kind: string; text: string } | null,
  ): Promise<void> {
    this.pendingBanner = banner;
    await this.loadNext();
  }

  private pendingBanner: { kind: string; text: string } | null = null;

  private handleError(err: unknown, retry: () => Promise<void>): void {
    if (err instanceof RejectedError) {
      this.question = null;
      this.renderTerminal("Annotation stopped", err.explanation);
      this.callbacks.onTerminal?.("rejected");
      return;
    }
    if (err instanceof NetworkError) {
      // keep question + selection; offer retry
      this.busy = false;
      this.render(String(err.message), retry);
      return;
    }
    this.question = null;
    this.renderTerminal("Error", err instanceof Error ? err.message : String(err));
  }

  private renderTerminal(title: string, message: string): void {
    const doc = this.root.ownerDocument;
    this.root.replaceChildren();
    const heading = doc.createElement("h2");
    heading.textContent = title;
    const body = doc.createElement("p");
    body.textContent = message;
    this.root.append(heading, body);
  }

  private render(networkMessage?: string, retry?: () => Promise<void>): void {
    const doc = this.root.ownerDocument;
    this.root.replaceChildren();
    if (!this.question) {
      const note = doc.createElement("p");
      note.textContent = "Loading…";
      this.root.append(note);
      return;
    }
    const q = this.question;

    if (this.pendingBanner) {
      const banner = doc.createElement("div");
      banner.className = `banner banner-${this.pendingBanner.kind}`;
      banner.setAttribute("data-role", "gold-banner");
      banner.textContent = this.pendingBanner.text;
      this.root.append(banner);
    }

    const progress = doc.createElement("div");
    progress.className = "progress";
    progress.setAttribute("data-role", "progress");
    progress.textContent =
      `${q.progress.responses_accepted} of ${q.progress.responses_needed} ` +
      "answers collected";
    this.root.append(progress);

    const notes = doc.createElement("ul");
    notes.className = "notes";
    for (const text of q.notes) {
      const li = doc.createElement("li");
      li.textContent = text;
      notes.append(li);
    }
    this.root.append(notes);

    const prompts = doc.createElement("p");
    prompts.className = "prompts";
    prompts.textContent = `${q.prompt_most} ${q.prompt_least}`;
    this.root.append(prompts);

    const cards = doc.createElement("div");
    cards.className = "cards";
    q.speakers.forEach((speaker, index) => {
      const card = doc.createElement("div");
      card.className = "card";
      card.setAttribute("data-role", "speaker-card");
      const label = doc.createElement("h3");
      label.textContent = speaker.label;
      const text = doc.createElement("p");
      text.textContent = speaker.text; // inert: text, never markup
      const controls = doc.createElement("div");
      const mostBtn = doc.createElement("button");
      mostBtn.type = "button";
      mostBtn.setAttribute("data-role", `most-${index}`);
      mostBtn.textContent = this.selection.most === index ? "MOST ✓" : "MOST";
      mostBtn.disabled = this.busy;
      mostBtn.addEventListener("click", () => {
        this.selection = selectMost(this.selection, index);
        this.render(networkMessage, retry);
      });
      const leastBtn = doc.createElement("button");
      leastBtn.type = "button";
      leastBtn.setAttribute("data-role", `least-${index}`);
      leastBtn.textContent = this.selection.least === index ? "LEAST ✓" : "LEAST";
      leastBtn.disabled = this.busy;
      leastBtn.addEventListener("click", () => {
        this.selection = selectLeast(this.selection, index);
        this.render(networkMessage, retry);
      });
      controls.append(mostBtn, leastBtn);
      card.append(label, text, controls);
      cards.append(card);
    });
    this.root.append(cards);

    const submit = doc.createElement("button");
    submit.type = "button";
    submit.setAttribute("data-role", "submit");
    submit.textContent = "Submit";
    submit.disabled = this.busy || !canSubmit(this.selection);
    submit.addEventListener("click", () => void this.submit());
    this.root.append(submit);

    const hint = doc.createElement("p");
    hint.className = "hint";
    hint.textContent = "Keys: 1–4 pick MOST, Shift+1–4 pick LEAST, Enter submits.";
    this.root.append(hint);

    if (networkMessage && retry) {
      const warning = doc.createElement("div");
      warning.className = "banner banner-bad";
      warning.setAttribute("data-role", "network-error");
      warning.textContent = `Connection problem: ${networkMessage}`;
      const retryBtn = doc.createElement("button");
      retryBtn.type = "button";
      retryBtn.setAttribute("data-role", "retry");
      retryBtn.textContent = "Retry";
      retryBtn.addEventListener("click", () => void retry());
      warning.append(doc.createElement("br"), retryBtn);
      this.root.append(warning);
    }
  }
}
