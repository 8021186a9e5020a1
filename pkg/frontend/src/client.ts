/** Thin typed client over the annotation service HTTP API. */

import {
  NextResponse,
  PROTOCOL_VERSION,
  Progress,
  Submission,
  SubmitOutcome,
  VersionInfo,
} from "./protocol";

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export class RejectedError extends Error {
  constructor(public explanation: string) {
    super(explanation);
    this.name = "RejectedError";
  }
}

export class BadRequestError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BadRequestError";
  }
}

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (response.status === 403) {
      const body = await response.json().catch(() => ({}));
      throw new RejectedError(body.explanation ?? body.error ?? "rejected");
    }
    if (response.status === 400) {
      const body = await response.json().catch(() => ({}));
      throw new BadRequestError(body.error ?? "bad request");
    }
    if (!response.ok) {
      throw new ProtocolError(`unexpected status ${response.status} for ${path}`);
    }
    return response;
  }

  async version(): Promise<VersionInfo> {
    const body = (await (await this.request("/api/version")).json()) as VersionInfo;
    if (body.protocol_version !== PROTOCOL_VERSION) {
      throw new ProtocolError(
        `service speaks protocol ${body.protocol_version}, ` +
          `this client requires ${PROTOCOL_VERSION}`,
      );
    }
    return body;
  }

  async createSession(): Promise<string> {
    const response = await this.request("/api/sessions", { method: "POST" });
    const body = await response.json();
    return body.session_id as string;
  }

  async progress(sessionId: string): Promise<Progress> {
    const response = await this.request(`/api/sessions/${sessionId}`);
    return (await response.json()) as Progress;
  }

  async nextQuestion(sessionId: string, annotatorId: string): Promise<NextResponse> {
    const params = new URLSearchParams({ annotator_id: annotatorId });
    const response = await this.request(
      `/api/sessions/${sessionId}/next?${params.toString()}`,
    );
    return (await response.json()) as NextResponse;
  }

  async submit(sessionId: string, submission: Submission): Promise<SubmitOutcome> {
    const response = await this.request(`/api/sessions/${sessionId}/responses`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(submission),
    });
    return (await response.json()) as SubmitOutcome;
  }

  async exportResponses(sessionId: string): Promise<string> {
    const response = await this.request(`/api/sessions/${sessionId}/export`);
    return await response.text();
  }
}
