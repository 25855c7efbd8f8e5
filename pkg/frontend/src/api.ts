import type { GatewayReply } from './types';

export class SessionGone extends Error {}

// Thin fetch wrapper over the gateway's three session endpoints.
export class GatewayClient {
  constructor(readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
  }

  async openSession(userId: string): Promise<string> {
    const res = await fetch(`${this.baseUrl}/session`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ user_id: userId }),
    });
    if (!res.ok) {
      throw new Error(`could not open a session (${res.status})`);
    }
    const body = (await res.json()) as { session_id: string };
    return body.session_id;
  }

  async sendMessage(sessionId: string, text: string): Promise<GatewayReply> {
    const res = await fetch(`${this.baseUrl}/session/${sessionId}/message`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ text }),
    });
    if (res.status === 404) {
      throw new SessionGone(`session ${sessionId} is gone`);
    }
    if (!res.ok) {
      throw new Error(`message failed (${res.status})`);
    }
    return (await res.json()) as GatewayReply;
  }

  // Best effort from tab close; sendBeacon cannot carry DELETE, so this is
  // a keepalive fetch that survives page unload in current browsers.
  closeSession(sessionId: string): void {
    const url = `${this.baseUrl}/session/${sessionId}`;
    void fetch(url, { method: 'DELETE', keepalive: true }).catch(() => undefined);
  }

  async closeSessionAwaited(sessionId: string): Promise<number> {
    const res = await fetch(`${this.baseUrl}/session/${sessionId}`, {
      method: 'DELETE',
    });
    if (!res.ok) {
      throw new Error(`close failed (${res.status})`);
    }
    const body = (await res.json()) as { merged_features: number };
    return body.merged_features;
  }
}
