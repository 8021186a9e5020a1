/** Wire protocol (version 1) spoken by the annotation service. */

export const PROTOCOL_VERSION = 1;

export interface VersionInfo {
  protocol_version: number;
  emotion: string;
}

export interface Progress {
  tuples_total: number;
  tuples_complete: number;
  responses_accepted: number;
  responses_needed: number;
  per_tuple: number;
  complete: boolean;
}

export interface Speaker {
  label: string;
  item_id: string;
  text: string;
}

export interface Question {
  done: false;
  tuple_index: number;
  position: number;
  speakers: Speaker[];
  prompt_most: string;
  prompt_least: string;
  notes: string[];
  progress: Progress;
  protocol_version: number;
}

export interface Done {
  done: true;
  progress: Progress;
}

export type NextResponse = Question | Done;

export interface Submission {
  annotator_id: string;
  tuple_index: number;
  best_id: string;
  worst_id: string;
}

export interface SubmitOutcome {
  outcome: "accepted" | "gold" | "rejected";
  progress: Progress;
  correct?: boolean;
  explanation?: string;
}
