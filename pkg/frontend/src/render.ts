// HTML builders. Pure string-in/string-out so they are testable without a
// browser; main.ts owns all DOM wiring. Never compute domain numbers here,
// only format what the service sent.

import type {
  AgentReport,
  AuditEntry,
  Candidates,
  Dimension,
  ResolvedAttrs,
  Resolution,
  SessionSnapshot,
} from './types.js';
import { CFM_CODES, DIMENSIONS, DIMENSION_LABELS } from './types.js';
import { stageLabel } from './state.js';

export function escapeHtml(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#39;');
}

const AGENT_TITLES: Record<string, string> = {
  task_analysis: 'Agent 1 — Task analysis',
  context_analysis: 'Agent 2 — Context analysis',
  cognitive_activities: 'Agent 3 — Cognitive activities',
  time_constraints: 'Agent 4 — Time constraints',
};

export function renderStageHeader(snapshot: SessionSnapshot): string {
  const stages = ['created', 'decomposed', 'attributed', 'resolved'] as const;
  const pills = stages
    .map((stage) => {
      const active = stage === snapshot.stage ? ' active' : '';
      return `<span class="stage-pill${active}">${stageLabel(stage)}</span>`;
    })
    .join('<span class="stage-arrow">&rarr;</span>');
  const ablation = snapshot.ablation
    ? ' <span class="badge badge-ablation">ablation: Part A skipped</span>'
    : '';
  return `<div class="stage-track">${pills}</div>
    <div class="session-meta">session <code>${escapeHtml(snapshot.session_id)}</code>
    &middot; table ${escapeHtml(snapshot.case.table)} &middot; ${snapshot.shots}-shot${ablation}</div>`;
}

export function renderTimings(timings: Record<string, number>): string {
  const entries = Object.entries(timings);
  if (entries.length === 0) return '';
  const parts = entries.map(
    ([stage, seconds]) => `${escapeHtml(stage)}: ${seconds.toFixed(3)}s`,
  );
  return `<div class="timings">stage latency &mdash; ${parts.join(' &middot; ')}</div>`;
}

export function renderReports(reports: AgentReport[] | null): string {
  if (!reports || reports.length === 0) {
    return '<p class="muted">No decomposition reports.</p>';
  }
  return reports
    .map((report) => {
      const title = AGENT_TITLES[report.kind] ?? report.kind;
      const sections = Object.entries(report.sections)
        .map(
          ([name, text]) =>
            `<dt>${escapeHtml(name.replaceAll('_', ' '))}</dt><dd>${escapeHtml(text)}</dd>`,
        )
        .join('');
      return `<details class="report">
        <summary>${escapeHtml(title)}</summary>
        <dl>${sections}</dl>
        <details class="raw-text"><summary>raw model text</summary><pre>${escapeHtml(
          report.raw_text,
        )}</pre></details>
      </details>`;
    })
    .join('\n');
}

function candidateText(dimension: Dimension, candidates: Candidates, index: number): string {
  if (dimension === 'cfm') return candidates.cfm[index].join('|');
  return candidates[dimension][index];
}

export function renderCandidates(candidates: Candidates | null): string {
  if (!candidates) return '<p class="muted">Not attributed yet.</p>';
  const panels = DIMENSIONS.map((dimension) => {
    const count = dimension === 'cfm' ? candidates.cfm.length : candidates[dimension].length;
    const rows = Array.from({ length: count }, (_, i) => {
      const text = candidateText(dimension, candidates, i);
      return `<li><button type="button" class="candidate" data-dimension="${dimension}"
        data-value="${escapeHtml(text)}">${i + 1}. ${escapeHtml(text)}</button></li>`;
    }).join('');
    return `<div class="candidate-panel">
      <h4>${DIMENSION_LABELS[dimension]}</h4>
      <ol class="candidates">${rows}</ol>
    </div>`;
  }).join('\n');
  const warnings = candidates.warnings.length
    ? `<div class="warnings">${candidates.warnings.map((w) => escapeHtml(w)).join('<br>')}</div>`
    : '';
  return panels + warnings;
}

export function provenanceBadge(provenance: string): string {
  const cls = provenance === 'expert_edited' ? 'badge-expert' : 'badge-model';
  const label = provenance === 'expert_edited' ? 'expert edited' : 'model rank 1';
  return `<span class="badge ${cls}">${label}</span>`;
}

export function renderEditors(attrs: ResolvedAttrs | null, editable: boolean): string {
  if (!attrs) return '<p class="muted">No selected attributes yet.</p>';
  const disabled = editable ? '' : ' disabled';
  const cfmBoxes = CFM_CODES.map((code) => {
    const checked = attrs.cfm.includes(code) ? ' checked' : '';
    return `<label class="cfm-box"><input type="checkbox" data-cfm="${code}"${checked}${disabled}> ${code}</label>`;
  }).join('');
  const textArea = (dimension: Dimension, value: string) => `
    <div class="editor-row">
      <label for="edit-${dimension}">${DIMENSION_LABELS[dimension]}
        ${provenanceBadge(attrs.provenance[dimension])}</label>
      <textarea id="edit-${dimension}" data-editor="${dimension}" rows="2"${disabled}>${escapeHtml(
        value,
      )}</textarea>
    </div>`;
  return `
    <div class="editor-row">
      <label for="edit-pif">${DIMENSION_LABELS.pif} ${provenanceBadge(attrs.provenance.pif)}</label>
      <input id="edit-pif" data-editor="pif" value="${escapeHtml(attrs.pif)}"${disabled}>
      <span class="field-error" id="error-pif"></span>
    </div>
    <div class="editor-row">
      <label>${DIMENSION_LABELS.cfm} ${provenanceBadge(attrs.provenance.cfm)}</label>
      <div class="cfm-group" id="edit-cfm">${cfmBoxes}</div>
      <span class="field-error" id="error-cfm"></span>
    </div>
    ${textArea('task_and_error_measure', attrs.task_and_error_measure)}
    ${textArea('pif_measure', attrs.pif_measure)}
    ${textArea('other_pifs_and_uncertainty', attrs.other_pifs_and_uncertainty)}`;
}

export function renderResolution(resolution: Resolution | null): string {
  if (!resolution) return '<p class="muted">Not resolved yet.</p>';
  const rows = resolution.ranked_matches
    .map((match) => {
      const breakdown = Object.entries(match.breakdown)
        .map(([term, value]) => `${term.replace('_term', '')} ${value.toFixed(2)}`)
        .join(', ');
      return `<tr>
        <td>${match.rank}</td>
        <td><code>${escapeHtml(match.entry_id)}</code></td>
        <td>${match.score.toFixed(3)}</td>
        <td>${String(match.error_rate)}</td>
        <td class="breakdown">${escapeHtml(breakdown)}</td>
      </tr>`;
    })
    .join('');
  return `<div class="base-hep">base HEP <strong id="base-hep-value">${String(
    resolution.base_hep,
  )}</strong></div>
    <table class="matches">
      <thead><tr><th>rank</th><th>entry</th><th>score</th><th>error rate</th><th>terms</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderAudit(entries: AuditEntry[]): string {
  if (entries.length === 0) return '<p class="muted">Empty audit trail.</p>';
  const rows = entries
    .map((entry) => {
      const when = new Date(entry.ts * 1000).toISOString().replace('T', ' ').slice(0, 19);
      const raw = entry.payload?.raw_text
        ? `<details class="raw-text"><summary>raw model text</summary><pre>${escapeHtml(
            entry.payload.raw_text,
          )}</pre></details>`
        : '';
      const error = entry.payload?.error
        ? `<div class="audit-error">${escapeHtml(entry.payload.error)}</div>`
        : '';
      return `<li><span class="audit-when">${when}</span>
        <span class="audit-actor">${escapeHtml(entry.actor)}</span>
        <span class="audit-action">${escapeHtml(entry.action)}</span>
        <code class="audit-digest">${escapeHtml(entry.digest)}</code>${error}${raw}</li>`;
    })
    .join('');
  return `<ol class="audit">${rows}</ol>`;
}

export function renderShotIds(shotIds: string[] | null): string {
  if (!shotIds || shotIds.length === 0) return '';
  const ids = shotIds.map((id) => `<code>${escapeHtml(id)}</code>`).join(', ');
  return `<div class="muted">worked examples used: ${ids}</div>`;
}
