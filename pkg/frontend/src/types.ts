// Wire types shared with the evaluation service. Field names mirror the
// server's JSON exactly; do not rename.

export type BqaLabel = "yes" | "no" | "unsure";
export type WordLabel = "correct" | "incorrect";
export type GapLabel = "clean" | "incorrect";

export interface QuestionNode {
  uid: string;
  skill: string;
  subskill: string;
  phrase: string;
  question: string;
  node_type: "presence" | "property" | "relation";
  depends_on: string[];
}

export interface TaggedPrompt {
  prompt_id: string;
  text: string;
  source: string;
  nodes: QuestionNode[];
}

export interface TaskConfig {
  id: string;
  name: string;
  enable_bqa_ai: boolean;
  shuffle_images: boolean;
  annotations: string[];
  dataset_version: string;
  prompts_file: string;
  models: string[];
}

export interface TaskItem {
  prompt_id: string;
  model_id: string;
  image_path: string;
  prompt_text: string;
  nodes: QuestionNode[];
  mechanisms: string[];
  anchors: Record<string, string[]>;
  ai_prefill: Record<string, BqaLabel>;
}

export interface RleMask {
  width: number;
  height: number;
  runs: number[];
}

export interface WordTileSheet {
  words: string[];
  word_labels: WordLabel[];
  gap_labels: GapLabel[];
}

export interface BqaAnswerSet {
  answers: { question_uid: string; label: BqaLabel }[];
}

export interface LikertAnswer {
  scope: string;
  value: number;
  scale_min: number;
  scale_max: number;
}

export type Payload = BqaAnswerSet | LikertAnswer | RleMask | WordTileSheet;

export interface AnnotationRecord {
  task_id: string;
  item: { prompt_id: string; model_id: string; image_path: string };
  annotator_id: string;
  mechanism: string;
  payload: Payload;
  ai_prefilled: boolean;
  timestamp: string;
}
