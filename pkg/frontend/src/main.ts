// DOM wiring for the review dashboard. All domain state comes from the
// service snapshots; this file only moves values between the DOM and the
// session flow controller.

import { ApiClient } from './api.js';
import { SessionFlow, type FlowView } from './controller.js';
import {
  renderAudit,
  renderCandidates,
  renderEditors,
  renderReports,
  renderResolution,
  renderShotIds,
  renderStageHeader,
  renderTimings,
} from './render.js';
import { diffEdits, validateEdits, type EditorValues } from './state.js';
import { CFM_CODES, SHOT_OPTIONS, TABLE_OPTIONS, type Dimension } from './types.js';

const api = new ApiClient('');

function byId<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing element #${id}`);
  return element as T;
}

function setDisabled(id: string, disabled: boolean): void {
  byId<HTMLButtonElement>(id).disabled = disabled;
}

function readEditorValues(): EditorValues {
  const cfm = CFM_CODES.filter(
    (code) =>
      byId<HTMLDivElement>('edit-cfm').querySelector<HTMLInputElement>(`input[data-cfm="${code}"]`)
        ?.checked,
  );
  const text = (dimension: Dimension) =>
    (document.querySelector(`[data-editor="${dimension}"]`) as HTMLInputElement | HTMLTextAreaElement)
      .value;
  return {
    pif: text('pif'),
    cfm: [...cfm],
    task_and_error_measure: text('task_and_error_measure'),
    pif_measure: text('pif_measure'),
    other_pifs_and_uncertainty: text('other_pifs_and_uncertainty'),
  };
}

function render(view: FlowView): void {
  const { snapshot, buttons, busy } = view;
  byId('flow-error').textContent = view.error ?? '';
  byId('session-section').hidden = snapshot === null;
  if (!snapshot || !buttons) return;

  byId('stage-header').innerHTML = renderStageHeader(snapshot);
  byId('timings').innerHTML = renderTimings(snapshot.timings);
  byId('reports-panel').innerHTML = renderReports(snapshot.reports);
  byId('candidates-panel').innerHTML = renderCandidates(snapshot.candidates);
  byId('editors-panel').innerHTML = renderEditors(snapshot.resolved_attrs, buttons.editing);
  byId('resolution-panel').innerHTML = renderResolution(snapshot.resolution);
  byId('shot-info').innerHTML = renderShotIds(snapshot.shot_ids);
  byId('audit-panel').innerHTML = renderAudit(snapshot.audit_log);

  setDisabled('btn-decompose', busy || !buttons.decompose);
  setDisabled('btn-attribute', busy || !buttons.attribute);
  setDisabled('btn-resolve', busy || !buttons.resolve);
  setDisabled('btn-reopen', busy || !buttons.reopen);
  setDisabled('btn-save-edits', busy || !buttons.editing);
  setDisabled('btn-create', busy);
}

const flow = new SessionFlow(api, render);

function showFieldErrors(problems: Partial<Record<Dimension, string>>): void {
  const pifError = document.getElementById('error-pif');
  if (pifError) pifError.textContent = problems.pif ?? '';
  const cfmError = document.getElementById('error-cfm');
  if (cfmError) cfmError.textContent = problems.cfm ?? '';
}

async function saveEdits(): Promise<void> {
  const snapshot = flow.view().snapshot;
  if (!snapshot?.resolved_attrs) return;
  const edits = diffEdits(snapshot.resolved_attrs, readEditorValues());
  if (Object.keys(edits).length === 0) return;
  const validation = validateEdits(edits);
  showFieldErrors(validation.problems);
  if (!validation.ok) return;
  await flow.saveEdits(edits);
}

function populateCaseForm(): void {
  const tableSelect = byId<HTMLSelectElement>('case-table');
  for (const option of TABLE_OPTIONS) {
    const el = document.createElement('option');
    el.value = option.code;
    el.textContent = `${option.label} (${option.code})`;
    tableSelect.appendChild(el);
  }
  const shotsSelect = byId<HTMLSelectElement>('case-shots');
  for (const k of SHOT_OPTIONS) {
    const el = document.createElement('option');
    el.value = String(k);
    el.textContent = `${k}-shot`;
    shotsSelect.appendChild(el);
  }
  shotsSelect.value = '5';

  // Annotate the three fixed options with loaded entry counts.
  api
    .listTables()
    .then((tables) => {
      for (const info of tables) {
        const option = tableSelect.querySelector<HTMLOptionElement>(`option[value="${info.table}"]`);
        if (option) option.textContent = `${info.label} (${info.table}, ${info.entry_count} entries)`;
      }
    })
    .catch(() => {
      // table counts are decorative; the selector still offers all 3 types
    });
}

async function createSession(): Promise<void> {
  const caseText = byId<HTMLTextAreaElement>('case-text').value;
  const caseError = byId('case-error');
  if (!caseText.trim()) {
    caseError.textContent = 'case required';
    return;
  }
  caseError.textContent = '';
  await flow.create(
    caseText,
    byId<HTMLSelectElement>('case-table').value,
    Number(byId<HTMLSelectElement>('case-shots').value),
    byId<HTMLInputElement>('case-ablation').checked,
  );
}

function wire(): void {
  populateCaseForm();
  byId('btn-create').addEventListener('click', () => void createSession());
  byId('btn-decompose').addEventListener('click', () => void flow.decompose());
  byId('btn-attribute').addEventListener('click', () => void flow.attribute());
  byId('btn-resolve').addEventListener('click', () => void flow.resolve());
  byId('btn-reopen').addEventListener('click', () => void flow.reopen());
  byId('btn-save-edits').addEventListener('click', () => void saveEdits());

  // Clicking a ranked candidate copies it into the matching editor.
  document.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    if (!target.matches('button.candidate')) return;
    if (!flow.view().buttons?.editing) return;
    const dimension = target.dataset.dimension as Dimension;
    const value = target.dataset.value ?? '';
    if (dimension === 'cfm') {
      const codes = value.split('|');
      for (const code of CFM_CODES) {
        const box = document.querySelector<HTMLInputElement>(`input[data-cfm="${code}"]`);
        if (box) box.checked = codes.includes(code);
      }
    } else {
      const editor = document.querySelector<HTMLInputElement | HTMLTextAreaElement>(
        `[data-editor="${dimension}"]`,
      );
      if (editor) editor.value = value;
    }
  });

  render(flow.view());
}

wire();
