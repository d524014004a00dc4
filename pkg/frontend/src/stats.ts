// Usability statistics table: one column per hardened challenge scheme.

import { StatsPayload } from "./api.js";

export const STAT_SCHEMES = ["unrec-only", "patch-only", "combined"] as const;

const ROWS: Array<[string, (s: SchemeCol) => string]> = [
	["Sessions", (s) => String(s.sessions)],
	["Passed", (s) => String(s.pass)],
	["Failed", (s) => String(s.fail)],
	["Expired", (s) => String(s.expired)],
	["Success rate", (s) =>
		s.success_rate === null ? "–" : `${(s.success_rate * 100).toFixed(1)}%`],
	["Median solve time", (s) =>
		s.median_solve_ms === null ? "–" : `${(s.median_solve_ms / 1000).toFixed(1)}s`],
];

interface SchemeCol {
	sessions: number;
	pass: number;
	fail: number;
	expired: number;
	success_rate: number | null;
	median_solve_ms: number | null;
}

const EMPTY: SchemeCol = {
	sessions: 0, pass: 0, fail: 0, expired: 0,
	success_rate: null, median_solve_ms: null,
};

export function renderStats(parent: HTMLElement, stats: StatsPayload): HTMLElement {
	const table = document.createElement("table");
	table.className = "stats-table";

	const head = table.createTHead().insertRow();
	head.appendChild(document.createElement("th"));
	for (const scheme of STAT_SCHEMES) {
		const th = document.createElement("th");
		th.textContent = scheme;
		head.appendChild(th);
	}

	const body = table.createTBody();
	for (const [label, fmt] of ROWS) {
		const tr = body.insertRow();
		const th = document.createElement("th");
		th.scope = "row";
		th.textContent = label;
		tr.appendChild(th);
		for (const scheme of STAT_SCHEMES) {
			tr.insertCell().textContent = fmt(stats.schemes[scheme] ?? EMPTY);
		}
	}

	parent.appendChild(table);
	return table;
}
