// Shared types mirroring the annotation service's JSON payloads.

export interface ItemView {
  item_id: string
  task_kind: string
  task_input: string
  output: string
  span: string
  type: string
  span_anchored: boolean
  disposition: string
  judged_by: string[]
  version: number
}

export interface TaxonomyType {
  id: string
  name: string
  level1: string
  level2: string
  definition: string
  criteria: string[]
}

export interface TaxonomyView {
  general_criteria: string[]
  types: TaxonomyType[]
}

export interface TypeStats {
  n_items: number
  n_double_judged: number
  n_matching: number
  n_final: number
  n_passed: number
  agreement_rate: number
  pass_rate: number
}

export interface StatsView {
  n_items: number
  n_pending: number
  n_double_judged: number
  agreement_rate: number
  pass_rate: number
  per_type: Record<string, TypeStats>
}

export type Verdict = 'Pass' | 'Fail'

export interface JudgmentResponse {
  item_id: string
  disposition: string
  version: number
}
