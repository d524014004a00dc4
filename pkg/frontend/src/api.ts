// Typed fetch client for the challenge service JSON API.
// The client's only truth source is the server verdict; it never sees keys.

export interface ChallengePayload {
	session_id: string;
	prompt: string;
	rows: number;
	cols: number;
	images: string[];
}

export interface AnswerResult {
	outcome: "pass" | "fail";
	elapsed_ms: number;
}

export interface SchemeStats {
	sessions: number;
	pass: number;
	fail: number;
	expired: number;
	success_rate: number | null;
	median_solve_ms: number | null;
}

export interface StatsPayload {
	schemes: { [scheme: string]: SchemeStats };
}

export class ApiError extends Error {
	constructor(public status: number, message: string) {
		super(message);
	}
}

async function checkJson<T>(r: Response): Promise<T> {
	if (!r.ok) {
		let detail = r.statusText;
		try {
			const body = await r.json();
			if (body && body.detail) {
				detail = String(body.detail);
			}
		} catch {
			// non-JSON error body; keep the status text
		}
		throw new ApiError(r.status, detail);
	}
	return r.json() as Promise<T>;
}

export async function issueChallenge(
	scheme: string,
	targetClass?: number,
): Promise<ChallengePayload> {
	const body: { scheme: string; target_class?: number } = { scheme };
	if (targetClass !== undefined) {
		body.target_class = targetClass;
	}
	const r = await fetch("/api/challenge", {
		method: "POST",
		headers: { "Content-Type": "application/json" },
		body: JSON.stringify(body),
	});
	return checkJson<ChallengePayload>(r);
}

export async function submitAnswer(
	sessionId: string,
	selection: number[],
): Promise<AnswerResult> {
	const r = await fetch(`/api/session/${sessionId}/answer`, {
		method: "POST",
		headers: { "Content-Type": "application/json" },
		body: JSON.stringify({ selection }),
	});
	return checkJson<AnswerResult>(r);
}

export async function fetchStats(scheme?: string): Promise<StatsPayload> {
	const url = scheme ? `/api/stats?scheme=${encodeURIComponent(scheme)}` : "/api/stats";
	const r = await fetch(url);
	return checkJson<StatsPayload>(r);
}
