// Challenge grid widget: render, click/keyboard selection, single submit.

import { ApiError, ChallengePayload, submitAnswer } from "./api.js";

export type ViewState = "solving" | "submitted" | "result-shown";

export interface ChallengeCallbacks {
	/** Called once the result panel is up; `passed` is the server verdict. */
	onResult?: (passed: boolean, elapsedMs: number) => void;
	/** The user asked for a fresh challenge (after fail/expiry/error). */
	onNext?: () => void;
}

export class ChallengeView {
	readonly sessionId: string;
	readonly rows: number;
	readonly cols: number;
	selected: Set<number> = new Set();
	state: ViewState = "solving";

	private root: HTMLElement;
	private cells: HTMLElement[] = [];
	private callbacks: ChallengeCallbacks;

	constructor(parent: HTMLElement, payload: ChallengePayload,
		callbacks: ChallengeCallbacks = {}) {
		this.sessionId = payload.session_id;
		this.rows = payload.rows;
		this.cols = payload.cols;
		this.callbacks = callbacks;

		this.root = document.createElement("div");
		this.root.className = "challenge";

		const prompt = document.createElement("p");
		prompt.className = "challenge-prompt";
		prompt.textContent = payload.prompt;
		this.root.appendChild(prompt);

		const grid = document.createElement("div");
		grid.className = "challenge-grid";
		grid.style.gridTemplateColumns = `repeat(${this.cols}, 1fr)`;
		// row-major and index-stable: cell i shows images[i]
		payload.images.forEach((url, i) => {
			const cell = document.createElement("div");
			cell.className = "challenge-cell";
			cell.tabIndex = 0;
			cell.setAttribute("role", "checkbox");
			cell.setAttribute("aria-checked", "false");
			cell.dataset.index = String(i);
			const img = document.createElement("img");
			img.src = url;
			img.alt = `choice ${i + 1}`;
			img.draggable = false;
			cell.appendChild(img);
			cell.addEventListener("click", () => this.toggleCell(i));
			cell.addEventListener("keydown", (e: KeyboardEvent) => {
				if (e.key === "Enter" || e.key === " ") {
					e.preventDefault();
					this.toggleCell(i);
				}
			});
			this.cells.push(cell);
			grid.appendChild(cell);
		});
		this.root.appendChild(grid);

		const submit = document.createElement("button");
		submit.className = "challenge-submit";
		submit.textContent = "Submit";
		submit.addEventListener("click", () => {
			void this.submit();
		});
		this.root.appendChild(submit);

		parent.appendChild(this.root);
	}

	toggleCell(index: number): void {
		if (this.state !== "solving") {
			return;
		}
		if (!Number.isInteger(index) || index < 0 || index >= this.cells.length) {
			return; // out-of-range clicks are ignored, not errors
		}
		if (this.selected.has(index)) {
			this.selected.delete(index);
		} else {
			this.selected.add(index);
		}
		const on = this.selected.has(index);
		this.cells[index].classList.toggle("selected", on);
		this.cells[index].setAttribute("aria-checked", String(on));
	}

	/** At most one answer POST ever leaves this view: the state flips to
	 * `submitted` before the request starts and never returns to `solving`. */
	async submit(): Promise<void> {
		if (this.state !== "solving") {
			return;
		}
		this.state = "submitted";
		const button = this.root.querySelector(".challenge-submit") as HTMLButtonElement;
		button.disabled = true;
		try {
			const result = await submitAnswer(this.sessionId, [...this.selected].sort((a, b) => a - b));
			this.showResult(result.outcome === "pass", result.elapsed_ms);
		} catch (e) {
			if (e instanceof ApiError && e.status === 410) {
				this.showError("This challenge expired.");
			} else {
				this.showError(e instanceof Error ? e.message : String(e));
			}
		}
	}

	private resultPanel(): HTMLElement {
		const panel = document.createElement("div");
		panel.className = "challenge-result";
		this.root.appendChild(panel);
		return panel;
	}

	private nextButton(panel: HTMLElement, label: string): void {
		const next = document.createElement("button");
		next.className = "challenge-next";
		next.textContent = label;
		next.addEventListener("click", () => this.callbacks.onNext?.());
		panel.appendChild(next);
	}

	private showResult(passed: boolean, elapsedMs: number): void {
		this.state = "result-shown";
		const panel = this.resultPanel();
		const banner = document.createElement("p");
		banner.className = passed ? "banner banner-pass" : "banner banner-fail";
		banner.textContent = passed
			? `Passed in ${(elapsedMs / 1000).toFixed(1)}s`
			: "Incorrect selection.";
		panel.appendChild(banner);
		// retry flow: a failed solve gets a freshly issued challenge
		this.nextButton(panel, passed ? "Next challenge" : "Try a new challenge");
		this.callbacks.onResult?.(passed, elapsedMs);
	}

	private showError(message: string): void {
		this.state = "result-shown";
		const panel = this.resultPanel();
		const banner = document.createElement("p");
		banner.className = "banner banner-error";
		banner.textContent = message;
		panel.appendChild(banner);
		this.nextButton(panel, "New challenge");
	}

	destroy(): void {
		this.root.remove();
	}
}
