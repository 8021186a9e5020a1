/** MOST/LEAST selection state.
 *
 * The submission builder is the only path to a request body, and it returns
 * null unless two *different* speakers are chosen, so an invalid submission
 * cannot be constructed through the UI.
 */

import { Question, Submission } from "./protocol";

export interface Selection {
  most: number | null;
  least: number | null;
}

export const emptySelection: Selection = { most: null, least: null };

export function selectMost(sel: Selection, index: number): Selection {
  return { ...sel, most: index };
}

export function selectLeast(sel: Selection, index: number): Selection {
  return { ...sel, least: index };
}

export function canSubmit(sel: Selection): boolean {
  return sel.most !== null && sel.least !== null && sel.most !== sel.least;
}

export function buildSubmission(
  sel: Selection,
  question: Question,
  annotatorId: string,
): Submission | null {
  if (!canSubmit(sel)) {
    return null;
  }
  const best = question.speakers[sel.most as number];
  const worst = question.speakers[sel.least as number];
  if (!best || !worst) {
    return null;
  }
  return {
    annotator_id: annotatorId,
    tuple_index: question.tuple_index,
    best_id: best.item_id,
    worst_id: worst.item_id,
  };
}

/** Keyboard mapping: 1-4 pick MOST, shift+1-4 pick LEAST. */
export function keyToAction(
  code: string,
  shiftKey: boolean,
): { kind: "most" | "least"; index: number } | null {
  const match = /^Digit([1-4])$/.exec(code);
  if (!match) {
    return null;
  }
  const index = Number(match[1]) - 1;
  return { kind: shiftKey ? "least" : "most", index };
}
