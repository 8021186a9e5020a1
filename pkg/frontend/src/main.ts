/** Browser entry point: version check, session setup, view bootstrap.
 *
 * Query parameters: ?api=<base-url> (default: same origin),
 * ?session=<id> to join an existing session, ?annotator=<id>.
 * The (session, annotator) pair is kept in sessionStorage so a reload
 * resumes at the next unanswered question.
 */

import { ApiClient } from "./client";
import { AnnotationView } from "./ui";

function storageKey(api: string): string {
  return `bws-intensity:${api}`;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "";
  const client = new ApiClient(api);

  try {
    const info = await client.version();
    const heading = document.getElementById("title");
    if (heading) {
      const emotion = info.emotion.charAt(0).toUpperCase() + info.emotion.slice(1);
      heading.textContent = `Degree of ${emotion} in English Language Tweets`;
    }
  } catch (err) {
    root.textContent =
      err instanceof Error ? err.message : "cannot reach the annotation service";
    return;
  }

  let sessionId = params.get("session");
  let annotatorId = params.get("annotator");
  const stored = window.sessionStorage.getItem(storageKey(api));
  if ((!sessionId || !annotatorId) && stored) {
    const parsed = JSON.parse(stored) as { sessionId: string; annotatorId: string };
    sessionId = sessionId ?? parsed.sessionId;
    annotatorId = annotatorId ?? parsed.annotatorId;
  }
  if (!annotatorId) {
    annotatorId = `annotator-${Math.random().toString(36).slice(2, 10)}`;
  }
  if (!sessionId) {
    sessionId = await client.createSession();
  }
  window.sessionStorage.setItem(
    storageKey(api),
    JSON.stringify({ sessionId, annotatorId }),
  );

  const view = new AnnotationView(root as HTMLElement, client, sessionId, annotatorId);
  await view.start();
}

void boot();
