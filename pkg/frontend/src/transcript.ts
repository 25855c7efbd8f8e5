import type { GatewayReply, Payload, PayloadType, Turn } from './types';

const ORDINAL_WORDS = [
  'first', 'second', 'third', 'fourth', 'fifth',
  'sixth', 'seventh', 'eighth', 'ninth', 'tenth',
];

// Shared convention with the gateway: card actions speak the same plain
// text a user could type, referencing items by their position on screen.
export function ordinalPhrase(rank: number): string {
  const word = ORDINAL_WORDS[rank - 1];
  return word ?? `number ${rank}`;
}

export function whyUtterance(rank: number): string {
  return `why the ${ordinalPhrase(rank)} one`;
}

export function likeItemUtterance(rank: number): string {
  return `i like the ${ordinalPhrase(rank)} one`;
}

export function dislikeItemUtterance(rank: number): string {
  return `i don't like the ${ordinalPhrase(rank)} one`;
}

// "genre=comedy" -> "comedy"; chips speak about the value, the category
// stays visible in the chip label.
export function featureValue(featureKey: string): string {
  const eq = featureKey.indexOf('=');
  return eq < 0 ? featureKey : featureKey.slice(eq + 1);
}

export function featureLabel(featureKey: string): string {
  const eq = featureKey.indexOf('=');
  if (eq < 0) return featureKey;
  return `${featureKey.slice(eq + 1)} (${featureKey.slice(0, eq)})`;
}

export function likeFeatureUtterance(featureKey: string): string {
  return `i love ${featureValue(featureKey)}`;
}

export function dislikeFeatureUtterance(featureKey: string): string {
  return `i hate ${featureValue(featureKey)}`;
}

export const QUICK_REPLIES: ReadonlyArray<{ label: string; text: string }> = [
  { label: 'Yes', text: 'yes' },
  { label: 'No', text: 'no' },
  { label: 'Skip', text: 'skip' },
];

// Append-only conversation log; rendering derives everything from it.
export class Transcript {
  private readonly log: Turn[] = [];

  get turns(): readonly Turn[] {
    return this.log;
  }

  addUser(text: string): Turn {
    const turn: Turn = { author: 'user', text, payloadType: null, payload: null };
    this.log.push(turn);
    return turn;
  }

  addSystem(reply: GatewayReply): Turn {
    const turn: Turn = {
      author: 'system',
      text: reply.reply,
      payloadType: reply.payload_type,
      payload: reply.payload,
    };
    this.log.push(turn);
    return turn;
  }

  addNotice(text: string): Turn {
    const turn: Turn = { author: 'system', text, payloadType: null, payload: null };
    this.log.push(turn);
    return turn;
  }

  lastPayloadOfType(payloadType: PayloadType): Payload | null {
    for (let i = this.log.length - 1; i >= 0; i -= 1) {
      const turn = this.log[i];
      if (turn && turn.payloadType === payloadType) return turn.payload;
    }
    return null;
  }
}
