// Live agreement / pass-rate dashboard formatting.

import type { StatsView } from './types.js'

export function formatPercent(rate: number): string {
  return `${(rate * 100).toFixed(1)}%`
}

export function summaryLine(stats: StatsView): string {
  if (stats.n_double_judged === 0) {
    return `${stats.n_items} items, ${stats.n_pending} pending — no double-judged items yet`
  }
  return (
    `${stats.n_items} items, ${stats.n_pending} pending — ` +
    `agreement ${formatPercent(stats.agreement_rate)} over ${stats.n_double_judged} double-judged, ` +
    `pass rate ${formatPercent(stats.pass_rate)}`
  )
}

export interface TypeRow {
  type: string
  items: number
  agreement: string
  passRate: string
}

export function perTypeRows(stats: StatsView): TypeRow[] {
  return Object.keys(stats.per_type)
    .sort()
    .map((type) => {
      const bucket = stats.per_type[type]
      return {
        type,
        items: bucket.n_items,
        agreement: bucket.n_double_judged > 0 ? formatPercent(bucket.agreement_rate) : '—',
        passRate: bucket.n_final > 0 ? formatPercent(bucket.pass_rate) : '—',
      }
    })
}
