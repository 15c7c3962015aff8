// End-to-end against the real backend: spawns the Python service with the
// mock provider and the demo fixtures, then drives the browser flow through
// actual HTTP. Skipped (with a notice) if the service cannot be started.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, type ChildProcess } from 'node:child_process';
import { fileURLToPath } from 'node:url';
import { dirname, join } from 'node:path';

import { ApiClient } from '../src/api.js';
import { SessionFlow } from '../src/controller.js';
import { buttonStateFor } from '../src/state.js';
import { renderResolution } from '../src/render.js';

const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), '..', '..');
const PORT = 8900 + (process.pid % 500);
const BASE_URL = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let serverReady = false;

async function waitForService(timeoutMs: number): Promise<boolean> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE_URL}/tables`);
      if (response.ok) return true;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  return false;
}

beforeAll(async () => {
  server = spawn(
    'python3',
    [
      '-m',
      'basehep.cli',
      'serve',
      '--data-dir',
      join(REPO_ROOT, 'demo', 'data'),
      '--provider',
      'mock',
      '--fixtures',
      join(REPO_ROOT, 'demo', 'fixtures.jsonl'),
      '--host',
      '127.0.0.1',
      '--port',
      String(PORT),
    ],
    { cwd: REPO_ROOT, stdio: 'ignore' },
  );
  server.on('error', () => {
    serverReady = false;
  });
  serverReady = await waitForService(20_000);
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe('browser flow against the real service', () => {
  it(
    'enter case, decompose, attribute, edit PIF, resolve, reopen, resolve',
    async (ctx) => {
      if (!serverReady) {
        ctx.skip();
        return;
      }
      const { readFileSync } = await import('node:fs');
      const caseText = readFileSync(join(REPO_ROOT, 'demo', 'case_pilot.txt'), 'utf-8');

      const api = new ApiClient(BASE_URL);
      const flow = new SessionFlow(api, () => {});

      await flow.create(caseText, 'SF', 5, false);
      let snapshot = flow.view().snapshot!;
      expect(snapshot.stage).toBe('created');
      expect(buttonStateFor(snapshot)).toMatchObject({ decompose: true, attribute: false });

      await flow.decompose();
      snapshot = flow.view().snapshot!;
      expect(flow.view().error).toBeNull();
      expect(snapshot.stage).toBe('decomposed');
      expect(snapshot.reports).toHaveLength(4);
      expect(buttonStateFor(snapshot)).toMatchObject({ decompose: false, attribute: true });

      await flow.attribute();
      snapshot = flow.view().snapshot!;
      expect(flow.view().error).toBeNull();
      expect(snapshot.stage).toBe('attributed');
      expect(snapshot.candidates?.pif.length).toBeGreaterThan(0);
      expect(buttonStateFor(snapshot)).toMatchObject({ resolve: true, editing: true });

      await flow.saveEdits({ pif: 'SF0' });
      snapshot = flow.view().snapshot!;
      expect(flow.view().error).toBeNull();
      expect(snapshot.resolved_attrs?.pif).toBe('SF0');
      expect(snapshot.resolved_attrs?.provenance.pif).toBe('expert_edited');

      await flow.resolve();
      snapshot = flow.view().snapshot!;
      expect(flow.view().error).toBeNull();
      expect(snapshot.stage).toBe('resolved');
      expect(buttonStateFor(snapshot)).toMatchObject({ resolve: false, reopen: true });

      // The displayed value is exactly what the service resolved.
      const serviceView = await api.getSession(snapshot.session_id);
      expect(snapshot.resolution?.base_hep).toBe(serviceView.resolution?.base_hep);
      expect(renderResolution(snapshot.resolution)).toContain(
        `id="base-hep-value">${String(serviceView.resolution?.base_hep)}<`,
      );

      await flow.reopen();
      expect(flow.view().snapshot?.stage).toBe('attributed');
      expect(flow.view().snapshot?.resolution).toBeNull();

      await flow.resolve();
      snapshot = flow.view().snapshot!;
      expect(snapshot.stage).toBe('resolved');
      expect(snapshot.resolution?.base_hep).toBeGreaterThan(0);
      const actions = snapshot.audit_log.map((entry) => entry.action);
      expect(actions.filter((a) => a === 'resolve')).toHaveLength(2);
    },
    60_000,
  );

  it(
    'rejects a malformed PIF edit server-side',
    async (ctx) => {
      if (!serverReady) {
        ctx.skip();
        return;
      }
      const { readFileSync } = await import('node:fs');
      const caseText = readFileSync(join(REPO_ROOT, 'demo', 'case_pilot.txt'), 'utf-8');
      const api = new ApiClient(BASE_URL);
      const flow = new SessionFlow(api, () => {});
      await flow.create(caseText, 'SF', 0, true); // ablation: straight to attribute
      await flow.attribute();
      expect(flow.view().snapshot?.stage).toBe('attributed');
      expect(flow.view().snapshot?.reports).toBeNull();
      await flow.saveEdits({ pif: '4SF' });
      expect(flow.view().error).toContain('PIF');
      expect(flow.view().snapshot?.resolved_attrs?.provenance.pif).toBe('model_rank1');
    },
    60_000,
  );
});
