// Wire contract of the gateway chat API. Field names mirror the JSON
// payloads exactly; the UI never invents state beyond these shapes.

export interface ExplanationFeature {
  feature: string; // canonical key, e.g. "genre=comedy"
  score: number;
}

export interface RecCard {
  item_id: string;
  title: string;
  final_score: number;
  explanation: { features: ExplanationFeature[] };
}

export interface QuestionPayload {
  feature: string;
  prompt: string;
}

export interface RecListPayload {
  items: RecCard[];
  question?: QuestionPayload;
}

export interface ExplanationPayload {
  item_id: string;
  title: string;
  features: ExplanationFeature[];
}

export interface ProfileEntry {
  feature: string;
  weight: number;
  source: 'history' | 'stated' | 'both';
}

export interface ProfilePayload {
  entries: ProfileEntry[];
}

export type Payload =
  | RecListPayload
  | ExplanationPayload
  | ProfilePayload
  | QuestionPayload;

export type PayloadType = 'rec_list' | 'explanation' | 'profile' | 'question' | null;

export interface GatewayReply {
  reply: string;
  payload_type: PayloadType;
  payload: Payload | null;
}

export interface Turn {
  author: 'user' | 'system';
  text: string;
  payloadType: PayloadType;
  payload: Payload | null;
}
