/**
 * DOM wiring for the annotation workbench. Tweet text is rendered with
 * textContent only - no markup or link interpretation - so annotators see
 * exactly what was written.
 */

import { ApiClient, Label } from "./api.js";
import { closeGate, disagreementRows, kappaHeadline, kappaRows, progressBars } from "./dashboard.js";
import { labelForKeypress } from "./keyboard.js";
import { BrowserStorage, SubmissionQueue } from "./queue.js";
import { AnnotatorSession, SessionState } from "./state.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let session: AnnotatorSession | null = null;
let api: ApiClient | null = null;
let round = 1;

function renderTask(state: SessionState): void {
  const card = $("task-card");
  const banner = $("banner");
  banner.textContent = state.banner ?? "";
  banner.className = state.banner ? "banner visible" : "banner";
  $("queued-count").textContent = state.queued > 0 ? `${state.queued} queued offline` : "";
  $("retry-button").style.display = state.phase === "offline" ? "inline-block" : "none";

  if (state.phase === "done") {
    card.innerHTML = "";
    const done = document.createElement("p");
    done.className = "done-note";
    done.textContent = `All assigned pairs labeled. (${state.labeled} this session)`;
    card.appendChild(done);
    return;
  }
  if (state.phase !== "task" || !state.task) {
    card.innerHTML = "";
    const note = document.createElement("p");
    note.className = "muted";
    note.textContent =
      state.phase === "loading" ? "Loading next task…" :
      state.phase === "offline" ? "Offline." : "";
    card.appendChild(note);
    return;
  }
  const task = state.task;
  card.innerHTML = "";
  const remaining = document.createElement("div");
  remaining.className = "muted";
  remaining.textContent = `${state.remaining} task(s) remaining in your queue`;
  const lemma = document.createElement("h2");
  lemma.textContent = task.lemma;
  const arrow = document.createElement("div");
  arrow.className = "mapping-arrow";
  arrow.textContent = "proposed concept";
  const concept = document.createElement("h3");
  concept.textContent = `${task.concept_name} (${task.concept_id})`;
  card.append(remaining, lemma, arrow, concept);

  const ctxHeader = document.createElement("h4");
  ctxHeader.textContent = task.context_tweets.length
    ? `Context tweets (${task.context_tweets.length})`
    : "No context tweets found for this lemma";
  card.appendChild(ctxHeader);
  if (task.low_context) {
    const warn = document.createElement("p");
    warn.className = "low-context";
    warn.textContent = "Low context: judge from the lemma alone or label 2 if unclear.";
    card.appendChild(warn);
  }
  const list = document.createElement("ul");
  list.className = "context-list";
  for (const tweet of task.context_tweets) {
    const item = document.createElement("li");
    item.textContent = tweet; // plain text on purpose
    list.appendChild(item);
  }
  card.appendChild(list);
}

async function refreshDashboard(): Promise<void> {
  if (!api) return;
  try {
    const [progress, kappa, disagreements] = await Promise.all([
      api.progress(round),
      api.kappa(round),
      api.disagreements(round),
    ]);

    const bars = $("progress-bars");
    bars.innerHTML = "";
    for (const bar of progressBars(progress)) {
      const row = document.createElement("div");
      row.className = "progress-row";
      const name = document.createElement("span");
      name.className = "progress-name";
      name.textContent = `${bar.annotator} ${bar.labeled}/${bar.assigned}`;
      const track = document.createElement("div");
      track.className = "progress-track";
      const fill = document.createElement("div");
      fill.className = "progress-fill";
      fill.style.width = `${bar.percent}%`;
      track.appendChild(fill);
      row.append(name, track);
      bars.appendChild(row);
    }

    $("kappa-headline").textContent = kappaHeadline(kappa);
    const kappaBody = $("kappa-rows");
    kappaBody.innerHTML = "";
    for (const row of kappaRows(kappa)) {
      const tr = document.createElement("tr");
      for (const cell of [row.set_index, row.annotators, row.kappa, String(row.n_items)]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      if (row.degenerate) tr.className = "degenerate";
      kappaBody.appendChild(tr);
    }

    const queue = $("disagreement-rows");
    queue.innerHTML = "";
    for (const row of disagreementRows(disagreements)) {
      const tr = document.createElement("tr");
      const cells = [row.lemma, row.concept_id, row.labels, row.resolved ? `final ${row.resolution}` : "unresolved"];
      for (const cell of cells) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      if (!row.resolved) {
        const td = document.createElement("td");
        const form = document.createElement("span");
        for (const label of [0, 1, 2] as Label[]) {
          const btn = document.createElement("button");
          btn.textContent = String(label);
          btn.className = "mini";
          btn.addEventListener("click", async () => {
            const note = (window.prompt(`Note for resolving as ${label} (optional unless overriding):`) ?? "").trim();
            try {
              await api!.adjudicate(round, row.pair_id, label, note);
            } catch (err) {
              window.alert(String(err));
            }
            await refreshDashboard();
          });
          form.appendChild(btn);
        }
        td.appendChild(form);
        tr.appendChild(td);
      }
      queue.appendChild(tr);
    }

    const gate = closeGate(disagreements);
    const closeBtn = $<HTMLButtonElement>("close-round");
    closeBtn.disabled = !gate.enabled;
    $("close-reason").textContent = gate.enabled ? "" : `blocked: ${gate.reason}`;
  } catch {
    // dashboard refresh is best effort; task flow surfaces real errors
  }
}

function connect(): void {
  const annotator = $<HTMLInputElement>("annotator-id").value.trim();
  const token = $<HTMLInputElement>("token").value.trim();
  round = parseInt($<HTMLInputElement>("round").value, 10) || 1;
  if (!annotator) {
    window.alert("Enter your annotator id first.");
    return;
  }
  api = new ApiClient("", token);
  session = new AnnotatorSession(
    api, round, annotator, new SubmissionQueue(new BrowserStorage()),
  );
  session.onChange(renderTask);
  session.onChange(() => void refreshDashboard());
  $("login-panel").style.display = "none";
  $("work-panel").style.display = "block";
  void session.start();
  void refreshDashboard();
}

function wire(): void {
  $("connect").addEventListener("click", connect);
  for (const label of [0, 1, 2] as Label[]) {
    $(`label-${label}`).addEventListener("click", () => void session?.submit(label));
  }
  $("retry-button").addEventListener("click", () => void session?.retry());
  $("refresh-dashboard").addEventListener("click", () => void refreshDashboard());
  $("close-round").addEventListener("click", async () => {
    try {
      const result = await api?.closeRound(round);
      window.alert(`Round closed. Labels exported to: ${result?.exported ?? "server"}`);
    } catch (err) {
      window.alert(String(err));
    }
  });
  window.addEventListener("keydown", (evt) => {
    const label = labelForKeypress(evt);
    if (label !== null) {
      void session?.submit(label);
    }
  });
  window.addEventListener("online", () => void session?.retry());
}

document.addEventListener("DOMContentLoaded", wire);
