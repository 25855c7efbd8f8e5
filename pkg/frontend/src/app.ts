import { GatewayClient, SessionGone } from './api';
import { renderTurn } from './render';
import { Transcript } from './transcript';

export interface AppOptions {
  userId: string;
  root: HTMLElement;
}

// One chat session against the gateway: input is locked while a request is
// in flight, replies append to the transcript, and every rendered element
// derives from a gateway payload.
export class ChatApp {
  readonly transcript = new Transcript();
  private client: GatewayClient;
  private sessionId: string | null = null;
  private root: HTMLElement;
  private userId: string;
  private feed!: HTMLElement;
  private input!: HTMLInputElement;
  private sendButton!: HTMLButtonElement;
  private endButton!: HTMLButtonElement;
  private chain: Promise<void> = Promise.resolve();

  constructor(baseUrl: string, options: AppOptions) {
    this.client = new GatewayClient(baseUrl);
    this.root = options.root;
    this.userId = options.userId;
    this.buildSkeleton();
  }

  private buildSkeleton(): void {
    this.root.innerHTML = '';
    this.feed = document.createElement('div');
    this.feed.className = 'feed';
    this.feed.dataset.testid = 'feed';

    const form = document.createElement('div');
    form.className = 'composer';
    this.input = document.createElement('input');
    this.input.type = 'text';
    this.input.placeholder = 'Say something, e.g. "recommend me something"';
    this.input.dataset.testid = 'composer-input';
    this.input.addEventListener('keydown', (event) => {
      if (event.key === 'Enter') this.submit();
    });
    this.sendButton = document.createElement('button');
    this.sendButton.textContent = 'Send';
    this.sendButton.dataset.testid = 'composer-send';
    this.sendButton.addEventListener('click', () => this.submit());
    this.endButton = document.createElement('button');
    this.endButton.textContent = 'End session';
    this.endButton.dataset.testid = 'composer-end';
    this.endButton.addEventListener('click', () => void this.end());
    form.append(this.input, this.sendButton, this.endButton);
    this.root.append(this.feed, form);

    window.addEventListener('beforeunload', () => {
      if (this.sessionId) this.client.closeSession(this.sessionId);
    });
  }

  async start(): Promise<void> {
    this.sessionId = await this.client.openSession(this.userId);
  }

  private submit(): void {
    const text = this.input.value.trim();
    if (!text) return;
    this.input.value = '';
    this.send(text);
  }

  // Serializes sends: one in-flight request per session.
  send(text: string): Promise<void> {
    this.chain = this.chain.then(() => this.deliver(text));
    return this.chain;
  }

  whenIdle(): Promise<void> {
    return this.chain;
  }

  private setBusy(busy: boolean): void {
    this.input.disabled = busy;
    this.sendButton.disabled = busy;
  }

  private appendNode(node: HTMLElement): void {
    this.feed.appendChild(node);
    this.feed.scrollTop = this.feed.scrollHeight;
  }

  private async deliver(text: string): Promise<void> {
    if (!this.sessionId) return;
    const userTurn = this.transcript.addUser(text);
    this.appendNode(renderTurn(userTurn, (t) => this.send(t)));
    this.setBusy(true);
    try {
      const reply = await this.client.sendMessage(this.sessionId, text);
      const turn = this.transcript.addSystem(reply);
      this.appendNode(renderTurn(turn, (t) => this.send(t)));
    } catch (error) {
      if (error instanceof SessionGone) {
        // stale session: open a fresh one and tell the user
        this.sessionId = await this.client.openSession(this.userId);
        const notice = this.transcript.addNotice(
          'That session had expired; a new one was started. Please resend.');
        this.appendNode(renderTurn(notice, (t) => this.send(t)));
      } else {
        const notice = this.transcript.addNotice('Network trouble; tap to retry.');
        const node = renderTurn(notice, (t) => this.send(t));
        node.classList.add('retry');
        node.dataset.testid = 'retry-turn';
        node.addEventListener('click', () => this.send(text), { once: true });
        this.appendNode(node);
      }
    } finally {
      this.setBusy(false);
    }
  }

  async end(): Promise<number | null> {
    await this.whenIdle();
    if (!this.sessionId) return null;
    const sid = this.sessionId;
    this.sessionId = null;
    const merged = await this.client.closeSessionAwaited(sid);
    const notice = this.transcript.addNotice(
      `Session closed; ${merged} taste features kept.`);
    this.appendNode(renderTurn(notice, () => undefined));
    this.setBusy(true);
    return merged;
  }
}
