import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError, ndjsonLines } from '../src/api';
import type { FetchLike } from '../src/api';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

interface Captured {
  url: string;
  method: string;
  body: unknown;
}

function capture(responses: Response[]): { calls: Captured[]; fetch: FetchLike } {
  const calls: Captured[] = [];
  return {
    calls,
    fetch: async (url, init) => {
      calls.push({
        url,
        method: init?.method ?? 'GET',
        body: init?.body ? JSON.parse(init.body as string) : undefined,
      });
      const next = responses.shift();
      if (!next) throw new Error('no scripted response left');
      return next;
    },
  };
}

describe('ApiClient', () => {
  it('tracks the session id from createSession', async () => {
    const { calls, fetch } = capture([
      jsonResponse({ id: 'abc' }),
      jsonResponse({ n: 4, n_train: 2, points: [] }),
    ]);
    const client = new ApiClient('http://svc', fetch);
    expect(await client.createSession()).toBe('abc');
    await client.generateDataset({ pattern: 'circle', n: 4 });
    expect(calls[1].url).toBe('http://svc/sessions/abc/dataset');
    expect(calls[1].body).toEqual({ pattern: 'circle', n: 4 });
  });

  it('refuses session calls before createSession', async () => {
    const client = new ApiClient('', capture([]).fetch);
    expect(() => client.getDataset()).toThrow(/no session/);
  });

  it('surfaces service errors with status and code', async () => {
    const { fetch } = capture([
      jsonResponse({ id: 's' }),
      jsonResponse({ code: 'concurrent_mutation', message: 'busy' }, 409),
    ]);
    const client = new ApiClient('', fetch);
    await client.createSession();
    const err = await client.storeModel().catch((e) => e as ApiError);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).code).toBe('concurrent_mutation');
    expect((err as ApiError).isConcurrentMutation).toBe(true);
  });

  it('parses the train NDJSON stream and keeps loss strings verbatim', async () => {
    const stream = [
      '{"epoch": 0, "loss": "0.9471773816398"}',
      '{"epoch": 1, "loss": "0.25000000000000006"}',
      '{"done": true, "train_accuracy": 1.0}',
      '',
    ].join('\n');
    const { fetch } = capture([
      jsonResponse({ id: 's' }),
      new Response(stream, { status: 200 }),
    ]);
    const client = new ApiClient('', fetch);
    await client.createSession();
    const losses: string[] = [];
    const summary = await client.train({ hyper: { epochs: 2 } }, (l) =>
      losses.push(l.loss),
    );
    expect(losses).toEqual(['0.9471773816398', '0.25000000000000006']);
    expect(summary.train_accuracy).toBe(1.0);
  });

  it('encodes predict coordinates without mangling the strings', async () => {
    const { calls, fetch } = capture([
      jsonResponse({ id: 's' }),
      jsonResponse({ label: 1, output: '0.5' }),
    ]);
    const client = new ApiClient('', fetch);
    await client.createSession();
    await client.predict('-0.2875996939029182', '1.5');
    expect(calls[1].url).toBe(
      '/sessions/s/predict?x=-0.2875996939029182&y=1.5',
    );
  });
});

describe('ndjsonLines', () => {
  it('splits streamed chunks on newlines', async () => {
    const encoder = new TextEncoder();
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        controller.enqueue(encoder.encode('{"a": 1}\n{"b"'));
        controller.enqueue(encoder.encode(': 2}\n'));
        controller.close();
      },
    });
    const lines: string[] = [];
    for await (const line of ndjsonLines(new Response(body))) lines.push(line);
    expect(lines).toEqual(['{"a": 1}', '{"b": 2}']);
  });

  it('falls back to buffered text bodies', async () => {
    const res = new Response('{"a": 1}\n\n{"b": 2}');
    Object.defineProperty(res, 'body', { value: null });
    const lines: string[] = [];
    for await (const line of ndjsonLines(res)) lines.push(line);
    expect(lines).toEqual(['{"a": 1}', '{"b": 2}']);
  });
});
