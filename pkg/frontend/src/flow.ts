/** Session flow: fetch -> answer -> submit until completion or rejection.
 *
 * The same loop drives both the interactive UI and scripted clients; the
 * answer strategy decides which speakers to pick.  Because the service keeps
 * serving the same question until it is answered, constructing a new flow for
 * an existing (session, annotator) pair resumes at the next unanswered
 * question, which is exactly what a page reload does.
 */

import { ApiClient, RejectedError } from "./client";
import { Question, SubmitOutcome } from "./protocol";

export type AnswerStrategy = (
  question: Question,
) => { bestId: string; worstId: string } | Promise<{ bestId: string; worstId: string }>;

export type FlowEvent =
  | { type: "question"; question: Question }
  | { type: "submitted"; outcome: SubmitOutcome }
  | { type: "gold-feedback"; correct: boolean }
  | { type: "complete" }
  | { type: "rejected"; explanation: string };

export type TerminalState = "complete" | "rejected";

export class SessionFlow {
  constructor(
    private client: ApiClient,
    public sessionId: string,
    public annotatorId: string,
  ) {}

  /** Drive the whole session; resolves with the terminal state. */
  async run(
    strategy: AnswerStrategy,
    onEvent?: (event: FlowEvent) => void,
  ): Promise<TerminalState> {
    const emit = onEvent ?? (() => undefined);
    for (;;) {
      let next;
      try {
        next = await this.client.nextQuestion(this.sessionId, this.annotatorId);
      } catch (err) {
        if (err instanceof RejectedError) {
          emit({ type: "rejected", explanation: err.explanation });
          return "rejected";
        }
        throw err;
      }
      if (next.done) {
        emit({ type: "complete" });
        return "complete";
      }
      emit({ type: "question", question: next });
      const answer = await strategy(next);
      const outcome = await this.client.submit(this.sessionId, {
        annotator_id: this.annotatorId,
        tuple_index: next.tuple_index,
        best_id: answer.bestId,
        worst_id: answer.worstId,
      });
      emit({ type: "submitted", outcome });
      if (outcome.outcome === "gold") {
        emit({ type: "gold-feedback", correct: outcome.correct === true });
      }
      if (outcome.outcome === "rejected") {
        emit({
          type: "rejected",
          explanation: outcome.explanation ?? "rejected by the accuracy gate",
        });
        return "rejected";
      }
    }
  }
}
