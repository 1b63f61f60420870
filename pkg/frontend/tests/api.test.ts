import { afterEach, describe, expect, it, vi } from 'vitest';
import { AnnotationApi, ConnectionError, ServiceError } from '../src/api';

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('AnnotationApi', () => {
  it('fetches the session view', async () => {
    const view = { done: false, index: 0, total: 15, candidate: null, hits: [] };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(view));
    vi.stubGlobal('fetch', fetchMock);

    const api = new AnnotationApi('http://svc');
    await expect(api.session()).resolves.toEqual(view);
    expect(fetchMock).toHaveBeenCalledWith('http://svc/session', undefined);
  });

  it('posts decisions as JSON and returns the advanced view', async () => {
    const next = { done: false, index: 1, total: 15, candidate: null, hits: [] };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(next));
    vi.stubGlobal('fetch', fetchMock);

    const api = new AnnotationApi();
    await expect(api.decide({ action: 'accept', gid: 6 })).resolves.toEqual(next);
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe('/decision');
    expect(init.method).toBe('POST');
    expect(init.headers['Content-Type']).toBe('application/json');
    expect(JSON.parse(init.body)).toEqual({ action: 'accept', gid: 6 });
  });

  it('surfaces the service error message verbatim', async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ error: "new-concept needs a non-empty 'gloss'" }, 400));
    vi.stubGlobal('fetch', fetchMock);

    const api = new AnnotationApi();
    const err = await api.decide({ action: 'new', gloss: '' }).catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(400);
    expect(err.message).toBe("new-concept needs a non-empty 'gloss'");
  });

  it('carries validation violations on finalize rejection', async () => {
    const violations = [
      { code: 'MISSING_GLOSS', severity: 'error', row: 9, message: "'hotel' has no gloss" },
    ];
    vi.stubGlobal('fetch', vi.fn().mockResolvedValue(jsonResponse({ violations }, 422)));

    const api = new AnnotationApi();
    const err = await api.finalize().catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(422);
    expect(err.violations).toEqual(violations);
  });

  it('falls back to the status line for non-JSON error bodies', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn().mockResolvedValue(new Response('boom', { status: 500, statusText: 'Server Error' })),
    );

    const err = await new AnnotationApi().session().catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.message).toBe('500 Server Error');
  });

  it('wraps network failures in ConnectionError', async () => {
    vi.stubGlobal('fetch', vi.fn().mockRejectedValue(new TypeError('fetch failed')));

    const err = await new AnnotationApi().session().catch((e) => e);
    expect(err).toBeInstanceOf(ConnectionError);
    expect(err.message).toContain('unreachable');
  });

  it('returns the sheet as raw text', async () => {
    const csv = '# ontology: urn:x\nlabel,language\n';
    vi.stubGlobal('fetch', vi.fn().mockResolvedValue(new Response(csv, { status: 200 })));

    await expect(new AnnotationApi().sheet()).resolves.toBe(csv);
  });

  it('builds search queries with the optional language', async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ hits: [] }));
    vi.stubGlobal('fetch', fetchMock);

    await new AnnotationApi().search('price range', 'en');
    expect(fetchMock.mock.calls[0][0]).toBe('/core/search?lemma=price+range&lang=en');
  });
});
