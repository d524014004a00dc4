// App shell: one challenge at a time, plus a stats view.

import { fetchStats, issueChallenge } from "./api.js";
import { ChallengeView } from "./challenge.js";
import { renderStats } from "./stats.js";

const SCHEME_CHOICES = ["clean", "unrec-only", "patch-only", "combined"];

function clear(el: HTMLElement): void {
	el.textContent = "";
}

export function initApp(root: HTMLElement): void {
	const nav = document.createElement("nav");
	const solveBtn = document.createElement("button");
	solveBtn.textContent = "Solve";
	const statsBtn = document.createElement("button");
	statsBtn.textContent = "Stats";
	const schemeSelect = document.createElement("select");
	for (const s of SCHEME_CHOICES) {
		const opt = document.createElement("option");
		opt.value = s;
		opt.textContent = s;
		schemeSelect.appendChild(opt);
	}
	nav.append(solveBtn, statsBtn, schemeSelect);

	const content = document.createElement("main");
	root.append(nav, content);

	let view: ChallengeView | null = null;

	async function showChallenge(): Promise<void> {
		clear(content);
		view?.destroy();
		try {
			const payload = await issueChallenge(schemeSelect.value);
			view = new ChallengeView(content, payload, { onNext: () => void showChallenge() });
		} catch (e) {
			const p = document.createElement("p");
			p.className = "banner banner-error";
			p.textContent = e instanceof Error ? e.message : String(e);
			const retry = document.createElement("button");
			retry.textContent = "Retry";
			retry.addEventListener("click", () => void showChallenge());
			content.append(p, retry);
		}
	}

	async function showStats(): Promise<void> {
		clear(content);
		view?.destroy();
		view = null;
		try {
			renderStats(content, await fetchStats());
		} catch (e) {
			const p = document.createElement("p");
			p.className = "banner banner-error";
			p.textContent = e instanceof Error ? e.message : String(e);
			content.appendChild(p);
		}
	}

	solveBtn.addEventListener("click", () => void showChallenge());
	statsBtn.addEventListener("click", () => void showStats());
	void showChallenge();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
	initApp(document.getElementById("app") as HTMLElement);
}
