// Pure view-state logic. Button enablement must mirror the service's legal
// transitions exactly; the snapshot is the only input.

import type { Dimension, EditPayload, ResolvedAttrs, SessionSnapshot, Stage } from './types.js';

export interface ButtonState {
  decompose: boolean;
  attribute: boolean;
  resolve: boolean;
  reopen: boolean;
  editing: boolean;
}

/** Legal-transition predicate of the session state machine. */
export function buttonState(stage: Stage, ablation: boolean): ButtonState {
  return {
    decompose: stage === 'created' && !ablation,
    attribute: stage === 'decomposed' || (stage === 'created' && ablation),
    resolve: stage === 'attributed',
    reopen: stage === 'resolved',
    editing: stage === 'attributed',
  };
}

export function buttonStateFor(snapshot: SessionSnapshot): ButtonState {
  return buttonState(snapshot.stage, snapshot.ablation);
}

const PIF_CODE_RE = /^[A-Z]+\d+(\.\d+)?$/;

/** Client-side mirror of the server's PIF grammar; the server re-validates. */
export function isValidPifCode(text: string): boolean {
  return PIF_CODE_RE.test(text.trim());
}

export function stageLabel(stage: Stage): string {
  return { created: 'Created', decomposed: 'Decomposed', attributed: 'Attributed', resolved: 'Resolved' }[
    stage
  ];
}

export interface EditorValues {
  pif: string;
  cfm: string[];
  task_and_error_measure: string;
  pif_measure: string;
  other_pifs_and_uncertainty: string;
}

export function editorValuesFrom(attrs: ResolvedAttrs): EditorValues {
  return {
    pif: attrs.pif,
    cfm: [...attrs.cfm],
    task_and_error_measure: attrs.task_and_error_measure,
    pif_measure: attrs.pif_measure,
    other_pifs_and_uncertainty: attrs.other_pifs_and_uncertainty,
  };
}

function sameSet(a: string[], b: string[]): boolean {
  if (a.length !== b.length) return false;
  const sorted = [...a].sort();
  return [...b].sort().every((v, i) => v === sorted[i]);
}

/**
 * Build the PUT payload from editor values, keeping only dimensions that
 * differ from the currently selected attributes. Empty diff means nothing
 * to save.
 */
export function diffEdits(current: ResolvedAttrs, edited: EditorValues): EditPayload {
  const payload: EditPayload = {};
  if (edited.pif.trim() !== current.pif) payload.pif = edited.pif.trim();
  if (!sameSet(edited.cfm, current.cfm)) payload.cfm = [...edited.cfm];
  for (const dim of [
    'task_and_error_measure',
    'pif_measure',
    'other_pifs_and_uncertainty',
  ] as const) {
    if (edited[dim] !== current[dim]) payload[dim] = edited[dim];
  }
  return payload;
}

export interface EditValidation {
  ok: boolean;
  problems: Partial<Record<Dimension, string>>;
}

export function validateEdits(payload: EditPayload): EditValidation {
  const problems: Partial<Record<Dimension, string>> = {};
  if (payload.pif !== undefined && !isValidPifCode(payload.pif)) {
    problems.pif = `not a PIF code: "${payload.pif}" (expected e.g. SF4 or SF3.3)`;
  }
  if (payload.cfm !== undefined && payload.cfm.length === 0) {
    problems.cfm = 'select at least one failure mode';
  }
  for (const dim of [
    'task_and_error_measure',
    'pif_measure',
    'other_pifs_and_uncertainty',
  ] as const) {
    const value = payload[dim];
    if (value !== undefined && value.trim() === '') {
      problems[dim] = 'must be non-empty';
    }
  }
  return { ok: Object.keys(problems).length === 0, problems };
}
