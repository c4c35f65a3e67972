#include "p2t/evalx.hpp"

#include "p2t/errors.hpp"
#include "p2t/text.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

namespace p2t {

GoldRecord gold_from_json(const json& value) {
    if (!value.is_object()) throw InputError("gold record must be a JSON object");
    GoldRecord g;
    try {
        g.span_id = value.at("span_id").get<std::string>();
        g.citation = value.at("citation").get<std::string>();
        g.is_rule_span = value.at("is_rule_span").get<bool>();
        if (value.contains("gold_rules")) {
            for (const auto& r : value.at("gold_rules")) {
                g.gold_rules.push_back(rule_from_json(r));
            }
        }
        if (value.contains("annotator_labels")) {
            g.annotator_labels = value.at("annotator_labels");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed gold record: ") + e.what());
    }
    if (g.is_rule_span && g.gold_rules.empty()) {
        throw InputError("gold rule span without gold_rules: " + g.span_id);
    }
    if (!g.is_rule_span && !g.gold_rules.empty()) {
        throw InputError("gold_rules present on a non-rule span: " + g.span_id);
    }
    return g;
}

// ---------------------------------------------------------------------------

std::string citation_tail(const std::string& citation) {
    static const std::vector<std::string> kDelims = {"¶", "§", ">", "/"};
    size_t cut = 0;
    for (const auto& d : kDelims) {
        size_t pos = citation.rfind(d);
        if (pos != std::string::npos) cut = std::max(cut, pos + d.size());
    }
    return text::collapse_ws(text::lowercase(citation.substr(cut)));
}

MatchResult match_spans(const std::vector<Rule>& predicted,
                        const std::vector<GoldRecord>& gold) {
    // Unique predicted spans, ordered by span_id.
    std::map<std::string, std::string> pred_spans;  // span_id -> citation
    for (const auto& r : predicted) {
        pred_spans.emplace(r.source.span_id, r.source.citation);
    }

    std::set<std::string> gold_ids;
    for (const auto& g : gold) {
        if (!gold_ids.insert(g.span_id).second) {
            throw InputError("duplicate gold span_id: " + g.span_id);
        }
    }

    MatchResult out;
    std::map<std::string, const GoldRecord*> gold_by_id;
    std::map<std::string, std::vector<const GoldRecord*>> gold_by_tail;
    for (const auto& g : gold) {
        if (!g.is_rule_span) continue;
        ++out.gold_rule_spans;
        gold_by_id.emplace(g.span_id, &g);
        gold_by_tail[citation_tail(g.citation)].push_back(&g);
    }
    for (auto& [_, list] : gold_by_tail) {
        std::sort(list.begin(), list.end(),
                  [](const GoldRecord* a, const GoldRecord* b) { return a->span_id < b->span_id; });
    }

    std::set<std::string> gold_taken;
    // Pass 1: exact identifier.
    for (const auto& [span_id, citation] : pred_spans) {
        auto it = gold_by_id.find(span_id);
        if (it != gold_by_id.end() && !gold_taken.count(span_id)) {
            gold_taken.insert(span_id);
            out.pairs.emplace_back(span_id, span_id);
            out.pred_to_gold[span_id] = span_id;
        }
        (void)citation;
    }
    // Pass 2: citation tail.
    for (const auto& [span_id, citation] : pred_spans) {
        if (out.pred_to_gold.count(span_id)) continue;
        auto it = gold_by_tail.find(citation_tail(citation));
        if (it == gold_by_tail.end()) continue;
        for (const GoldRecord* g : it->second) {
            if (gold_taken.count(g->span_id)) continue;
            gold_taken.insert(g->span_id);
            out.pairs.emplace_back(span_id, g->span_id);
            out.pred_to_gold[span_id] = g->span_id;
            break;
        }
    }

    for (const auto& [span_id, _] : pred_spans) {
        if (!out.pred_to_gold.count(span_id)) out.unmatched_pred.push_back(span_id);
    }
    for (const auto& g : gold) {
        if (g.is_rule_span && !gold_taken.count(g.span_id)) {
            out.unmatched_gold.push_back(g.span_id);
        }
    }
    return out;
}

double coverage(const MatchResult& match) {
    if (match.gold_rule_spans == 0) {
        throw InputError("coverage undefined: gold set has no rule spans");
    }
    return static_cast<double>(match.pairs.size()) /
           static_cast<double>(match.gold_rule_spans);
}

Prf span_prf(const MatchResult& match) {
    double tp = static_cast<double>(match.pairs.size());
    double fp = static_cast<double>(match.unmatched_pred.size());
    double fn = static_cast<double>(match.unmatched_gold.size());
    Prf out;
    out.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

namespace {

struct RankedItem {
    double score;
    bool tp;
    std::string id;
};

double average_precision(std::vector<RankedItem> items, int gold_total) {
    if (gold_total <= 0) throw InputError("AUPRC undefined: no gold rule spans");
    std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    double ap = 0.0;
    int tp_so_far = 0;
    for (size_t k = 0; k < items.size(); ++k) {
        if (!items[k].tp) continue;
        ++tp_so_far;
        double precision_at_k = static_cast<double>(tp_so_far) / static_cast<double>(k + 1);
        ap += precision_at_k / static_cast<double>(gold_total);
    }
    return ap;
}

double span_score(const std::vector<const Rule*>& rules) {
    double score = 0.0;
    for (const Rule* r : rules) score = std::max(score, r->confidence.value_or(0.5));
    return score;
}

}  // namespace

double span_auprc(const std::vector<Rule>& predicted, const std::vector<GoldRecord>& gold) {
    MatchResult match = match_spans(predicted, gold);
    std::map<std::string, std::vector<const Rule*>> by_span;
    for (const auto& r : predicted) by_span[r.source.span_id].push_back(&r);
    std::vector<RankedItem> items;
    for (const auto& [span_id, rules] : by_span) {
        items.push_back({span_score(rules), match.pred_to_gold.count(span_id) > 0, span_id});
    }
    return average_precision(std::move(items), match.gold_rule_spans);
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kSlotFields = {
    "actor",      "data_domain", "context",     "hazard",
    "conditions", "exceptions",  "requirement", "evidence_signals",
};

namespace {

std::set<std::string> normalized_set(const std::vector<std::string>& entries) {
    std::set<std::string> out;
    for (const auto& e : entries) {
        std::string n = text::collapse_ws(text::lowercase(e));
        if (!n.empty()) out.insert(n);
    }
    return out;
}

double overlap_score(const std::vector<std::string>& pred,
                     const std::vector<std::string>& gold) {
    auto sp = normalized_set(pred);
    auto sg = normalized_set(gold);
    if (sp.empty() && sg.empty()) return 1.0;  // agreement on absence
    for (const auto& x : sp) {
        if (sg.count(x)) return 1.0;
    }
    return 0.0;
}

std::string joined(const std::vector<std::string>& entries) {
    std::string out;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i) out += "; ";
        out += entries[i];
    }
    return out;
}

}  // namespace

SlotScores slot_similarity(const Rule& pred, const Rule& gold, Provider& provider) {
    SlotScores out;
    out.per_field["actor"] = overlap_score(pred.scope.actor, gold.scope.actor);
    out.per_field["data_domain"] = overlap_score(pred.scope.data_domain, gold.scope.data_domain);
    out.per_field["context"] = overlap_score(pred.scope.context, gold.scope.context);
    out.per_field["hazard"] = provider.score_similarity(pred.hazard, gold.hazard);
    out.per_field["conditions"] =
        provider.score_similarity(joined(pred.conditions), joined(gold.conditions));
    out.per_field["exceptions"] =
        provider.score_similarity(joined(pred.exceptions), joined(gold.exceptions));
    out.per_field["requirement"] = provider.score_similarity(pred.requirement, gold.requirement);
    out.per_field["evidence_signals"] =
        provider.score_similarity(joined(pred.testability.evidence_signals),
                                  joined(gold.testability.evidence_signals));
    double sum = 0.0;
    for (const auto& f : kSlotFields) sum += out.per_field[f];
    out.macro = sum / static_cast<double>(kSlotFields.size());
    return out;
}

// ---------------------------------------------------------------------------

double cohen_kappa(const std::vector<std::string>& labels_a,
                   const std::vector<std::string>& labels_b) {
    if (labels_a.size() != labels_b.size()) {
        throw InputError("cohen_kappa: label vectors differ in length");
    }
    if (labels_a.empty()) throw InputError("cohen_kappa: empty label vectors");
    double n = static_cast<double>(labels_a.size());
    std::map<std::string, double> marg_a, marg_b;
    double agree = 0.0;
    for (size_t i = 0; i < labels_a.size(); ++i) {
        marg_a[labels_a[i]] += 1.0;
        marg_b[labels_b[i]] += 1.0;
        if (labels_a[i] == labels_b[i]) agree += 1.0;
    }
    double po = agree / n;
    double pe = 0.0;
    for (const auto& [label, count_a] : marg_a) {
        auto it = marg_b.find(label);
        if (it != marg_b.end()) pe += (count_a / n) * (it->second / n);
    }
    if (std::abs(1.0 - pe) < 1e-12) {
        return std::abs(1.0 - po) < 1e-12 ? 1.0 : 0.0;
    }
    return (po - pe) / (1.0 - pe);
}

double krippendorff_alpha(const std::vector<std::vector<std::set<std::string>>>& units,
                          AlphaDistance distance) {
    // Intern distinct values.
    std::vector<std::set<std::string>> values;
    std::map<std::set<std::string>, size_t> value_id;
    auto intern = [&](const std::set<std::string>& v) {
        auto it = value_id.find(v);
        if (it != value_id.end()) return it->second;
        size_t id = values.size();
        values.push_back(v);
        value_id.emplace(v, id);
        return id;
    };

    std::vector<std::vector<size_t>> kept;
    for (const auto& unit : units) {
        if (unit.size() < 2) continue;  // unpairable
        std::vector<size_t> ids;
        ids.reserve(unit.size());
        for (const auto& v : unit) ids.push_back(intern(v));
        kept.push_back(std::move(ids));
    }
    double n = 0.0;
    for (const auto& unit : kept) n += static_cast<double>(unit.size());
    if (n < 2.0) throw InputError("krippendorff_alpha: fewer than 2 pairable judgments");

    auto dist = [&](size_t a, size_t b) -> double {
        if (a == b) return 0.0;
        if (distance == AlphaDistance::nominal) return values[a] == values[b] ? 0.0 : 1.0;
        const auto& sa = values[a];
        const auto& sb = values[b];
        if (sa.empty() && sb.empty()) return 0.0;
        size_t inter = 0;
        for (const auto& x : sa) {
            if (sb.count(x)) ++inter;
        }
        size_t uni = sa.size() + sb.size() - inter;
        if (uni == 0) return 0.0;
        return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
    };

    // Coincidence matrix.
    size_t v = values.size();
    std::vector<double> o(v * v, 0.0);
    for (const auto& unit : kept) {
        double m = static_cast<double>(unit.size());
        for (size_t i = 0; i < unit.size(); ++i) {
            for (size_t j = 0; j < unit.size(); ++j) {
                if (i == j) continue;
                o[unit[i] * v + unit[j]] += 1.0 / (m - 1.0);
            }
        }
    }
    std::vector<double> nc(v, 0.0);
    for (size_t c = 0; c < v; ++c) {
        for (size_t k = 0; k < v; ++k) nc[c] += o[c * v + k];
    }

    double d_o = 0.0, d_e = 0.0;
    for (size_t c = 0; c < v; ++c) {
        for (size_t k = 0; k < v; ++k) {
            double d = dist(c, k);
            d_o += o[c * v + k] * d;
            d_e += nc[c] * nc[k] * d;
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if (d_e <= 0.0) return 1.0;  // no expected disagreement
    return 1.0 - d_o / d_e;
}

std::pair<double, double> bootstrap_ci(
    const std::function<double(const std::vector<size_t>&)>& metric, size_t n,
    int resamples, double level, unsigned long long seed) {
    if (n == 0) throw InputError("bootstrap_ci: empty data");
    if (resamples < 100) throw InputError("bootstrap_ci: resamples must be >= 100");
    if (level <= 0.0 || level >= 1.0) throw InputError("bootstrap_ci: level must be in (0,1)");

    std::mt19937_64 engine(seed);
    std::vector<double> stats;
    stats.reserve(static_cast<size_t>(resamples));
    std::vector<size_t> indices(n);
    for (int r = 0; r < resamples; ++r) {
        for (size_t i = 0; i < n; ++i) indices[i] = static_cast<size_t>(engine() % n);
        stats.push_back(metric(indices));
    }
    std::sort(stats.begin(), stats.end());
    auto percentile = [&](double q) {
        double pos = q * static_cast<double>(stats.size() - 1);
        size_t lo = static_cast<size_t>(std::floor(pos));
        size_t hi = std::min(lo + 1, stats.size() - 1);
        double frac = pos - static_cast<double>(lo);
        return stats[lo] * (1.0 - frac) + stats[hi] * frac;
    };
    double tail = (1.0 - level) / 2.0;
    return {percentile(tail), percentile(1.0 - tail)};
}

// ---------------------------------------------------------------------------

json metrics_to_json(const MetricsReport& report) {
    json ci = json::object();
    for (const auto& [name, interval] : report.ci) {
        ci[name] = json::array({interval.first, interval.second});
    }
    json per_field = json::object();
    for (const auto& [name, value] : report.per_field) per_field[name] = value;
    json out{{"gold_spans", report.gold_spans},
             {"pred_spans", report.pred_spans},
             {"matched", report.matched},
             {"coverage", report.coverage},
             {"span_precision", report.span_precision},
             {"span_recall", report.span_recall},
             {"span_f1", report.span_f1},
             {"span_auprc", report.span_auprc},
             {"se_slot_similarity", report.se_slot_similarity},
             {"evidence_similarity", report.evidence_similarity},
             {"per_field", per_field},
             {"ci", ci}};
    out["test_acc"] = report.test_acc ? json(*report.test_acc) : json(nullptr);
    return out;
}

namespace {

/// Per-gold-span evaluation unit plus the false-positive predicted spans;
/// bootstrap resampling happens over these.
struct EvalUnits {
    // gold units
    std::vector<int> matched;          // 0/1
    std::vector<double> span_value;    // slot macro (0 when unmatched)
    std::vector<double> ev_value;      // evidence_signals field value
    std::vector<int> pairs;            // paired rules
    std::vector<int> agree;            // testable-label agreements
    std::vector<double> pred_score;    // matched pred span score
    std::vector<std::string> pred_id;  // matched pred span id
    // false-positive predicted spans
    std::vector<double> fp_score;
    std::vector<std::string> fp_id;

    size_t gold_count() const { return matched.size(); }
    size_t total() const { return matched.size() + fp_score.size(); }
};

double recompute_f1(const EvalUnits& u, const std::vector<size_t>& idx) {
    double tp = 0, fp = 0, fn = 0;
    for (size_t i : idx) {
        if (i < u.gold_count()) {
            if (u.matched[i]) ++tp;
            else ++fn;
        } else {
            ++fp;
        }
    }
    double p = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    double r = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
}

double recompute_ap(const EvalUnits& u, const std::vector<size_t>& idx) {
    std::vector<RankedItem> items;
    int gold_total = 0;
    int copy = 0;
    for (size_t i : idx) {
        ++copy;
        if (i < u.gold_count()) {
            ++gold_total;
            if (u.matched[i]) {
                items.push_back(
                    {u.pred_score[i], true, u.pred_id[i] + "#" + std::to_string(copy)});
            }
        } else {
            size_t f = i - u.gold_count();
            items.push_back({u.fp_score[f], false, u.fp_id[f] + "#" + std::to_string(copy)});
        }
    }
    if (gold_total == 0) return 0.0;
    return average_precision(std::move(items), gold_total);
}

}  // namespace

MetricsReport evaluate(const std::vector<Rule>& predicted, const std::vector<GoldRecord>& gold,
                       Provider& provider, int bootstrap_resamples, unsigned long long seed) {
    MatchResult match = match_spans(predicted, gold);
    MetricsReport report;
    report.gold_spans = match.gold_rule_spans;
    report.matched = static_cast<int>(match.pairs.size());

    std::map<std::string, std::vector<const Rule*>> pred_by_span;
    for (const auto& r : predicted) pred_by_span[r.source.span_id].push_back(&r);
    report.pred_spans = static_cast<int>(pred_by_span.size());

    std::map<std::string, const GoldRecord*> gold_by_id;
    for (const auto& g : gold) gold_by_id.emplace(g.span_id, &g);
    std::map<std::string, std::string> gold_to_pred;
    for (const auto& [p, g] : match.pairs) gold_to_pred[g] = p;

    EvalUnits units;
    std::map<std::string, double> field_sums;
    for (const auto& f : kSlotFields) field_sums[f] = 0.0;
    int total_pairs = 0, total_agree = 0;

    // Deterministic gold order.
    std::vector<const GoldRecord*> rule_spans;
    for (const auto& g : gold) {
        if (g.is_rule_span) rule_spans.push_back(&g);
    }
    std::sort(rule_spans.begin(), rule_spans.end(),
              [](const GoldRecord* a, const GoldRecord* b) { return a->span_id < b->span_id; });

    for (const GoldRecord* g : rule_spans) {
        auto it = gold_to_pred.find(g->span_id);
        if (it == gold_to_pred.end()) {
            units.matched.push_back(0);
            units.span_value.push_back(0.0);
            units.ev_value.push_back(0.0);
            units.pairs.push_back(0);
            units.agree.push_back(0);
            units.pred_score.push_back(0.0);
            units.pred_id.push_back("");
            continue;
        }
        const auto& preds = pred_by_span.at(it->second);
        const auto& golds = g->gold_rules;

        // Greedy max-similarity pairing of rules within the span.
        struct Cand {
            double macro;
            size_t pi, gi;
            SlotScores scores;
        };
        std::vector<Cand> cands;
        for (size_t pi = 0; pi < preds.size(); ++pi) {
            for (size_t gi = 0; gi < golds.size(); ++gi) {
                SlotScores s = slot_similarity(*preds[pi], golds[gi], provider);
                cands.push_back({s.macro, pi, gi, std::move(s)});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.macro != b.macro) return a.macro > b.macro;
            return std::tie(a.pi, a.gi) < std::tie(b.pi, b.gi);
        });
        std::set<size_t> used_p, used_g;
        double macro_sum = 0.0;
        std::map<std::string, double> span_field_sums;
        for (const auto& f : kSlotFields) span_field_sums[f] = 0.0;
        int span_pairs = 0, span_agree = 0;
        for (const auto& c : cands) {
            if (used_p.count(c.pi) || used_g.count(c.gi)) continue;
            used_p.insert(c.pi);
            used_g.insert(c.gi);
            macro_sum += c.macro;
            for (const auto& f : kSlotFields) span_field_sums[f] += c.scores.per_field.at(f);
            ++span_pairs;
            if (preds[c.pi]->is_testable == golds[c.gi].is_testable) ++span_agree;
        }
        double denom = static_cast<double>(std::max(preds.size(), golds.size()));
        double span_value = denom > 0 ? macro_sum / denom : 0.0;
        for (const auto& f : kSlotFields) field_sums[f] += span_field_sums[f] / denom;
        total_pairs += span_pairs;
        total_agree += span_agree;

        units.matched.push_back(1);
        units.span_value.push_back(span_value);
        units.ev_value.push_back(span_field_sums["evidence_signals"] / denom);
        units.pairs.push_back(span_pairs);
        units.agree.push_back(span_agree);
        units.pred_score.push_back(span_score(preds));
        units.pred_id.push_back(it->second);
    }
    for (const auto& span_id : match.unmatched_pred) {
        units.fp_score.push_back(span_score(pred_by_span.at(span_id)));
        units.fp_id.push_back(span_id);
    }

    report.coverage = coverage(match);
    Prf prf = span_prf(match);
    report.span_precision = prf.precision;
    report.span_recall = prf.recall;
    report.span_f1 = prf.f1;
    report.span_auprc = span_auprc(predicted, gold);

    double g_count = static_cast<double>(units.gold_count());
    double se_sum = 0.0, ev_sum = 0.0;
    for (double v : units.span_value) se_sum += v;
    for (double v : units.ev_value) ev_sum += v;
    report.se_slot_similarity = g_count > 0 ? se_sum / g_count : 0.0;
    report.evidence_similarity = g_count > 0 ? ev_sum / g_count : 0.0;
    for (const auto& f : kSlotFields) {
        report.per_field[f] = g_count > 0 ? field_sums[f] / g_count : 0.0;
    }
    if (total_pairs > 0) {
        report.test_acc = static_cast<double>(total_agree) / static_cast<double>(total_pairs);
    }

    if (bootstrap_resamples >= 100) {
        size_t n = units.total();
        auto gold_mean = [&](const std::vector<size_t>& idx,
                             const std::vector<double>& values) {
            double sum = 0.0;
            int count = 0;
            for (size_t i : idx) {
                if (i < units.gold_count()) {
                    sum += values[i];
                    ++count;
                }
            }
            return count > 0 ? sum / count : 0.0;
        };
        std::map<std::string, std::function<double(const std::vector<size_t>&)>> metrics;
        metrics["coverage"] = [&](const std::vector<size_t>& idx) {
            double m = 0, g = 0;
            for (size_t i : idx) {
                if (i < units.gold_count()) {
                    ++g;
                    m += units.matched[i];
                }
            }
            return g > 0 ? m / g : 0.0;
        };
        metrics["span_f1"] = [&](const std::vector<size_t>& idx) {
            return recompute_f1(units, idx);
        };
        metrics["span_auprc"] = [&](const std::vector<size_t>& idx) {
            return recompute_ap(units, idx);
        };
        metrics["se_slot_similarity"] = [&](const std::vector<size_t>& idx) {
            return gold_mean(idx, units.span_value);
        };
        metrics["evidence_similarity"] = [&](const std::vector<size_t>& idx) {
            return gold_mean(idx, units.ev_value);
        };
        if (report.test_acc) {
            metrics["test_acc"] = [&](const std::vector<size_t>& idx) {
                double a = 0, p = 0;
                for (size_t i : idx) {
                    if (i < units.gold_count()) {
                        a += units.agree[i];
                        p += units.pairs[i];
                    }
                }
                return p > 0 ? a / p : 0.0;
            };
        }
        unsigned long long metric_seed = seed;
        for (const auto& [name, fn] : metrics) {
            report.ci[name] = bootstrap_ci(fn, n, bootstrap_resamples, 0.95, metric_seed);
            ++metric_seed;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

json agreement_to_json(const AgreementReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    json ci = json::object();
    for (const auto& [name, interval] : report.ci) {
        ci[name] = json::array({interval.first, interval.second});
    }
    return json{{"span_kappa", opt(report.span_kappa)},
                {"testable_kappa", opt(report.testable_kappa)},
                {"hazard_kappa", opt(report.hazard_kappa)},
                {"scope_actors_alpha", opt(report.scope_actors_alpha)},
                {"ci", ci}};
}

namespace {

std::string label_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

/// Aligned rater-pair labels for one categorical key across records.
void collect_kappa_labels(const std::vector<GoldRecord>& gold, const std::string& key,
                          const std::vector<size_t>& idx, std::vector<std::string>& a,
                          std::vector<std::string>& b) {
    for (size_t i : idx) {
        const auto& labels = gold[i].annotator_labels;
        if (!labels.is_object() || !labels.contains(key)) continue;
        const auto& arr = labels.at(key);
        if (!arr.is_array() || arr.size() < 2) continue;
        if (arr[0].is_null() || arr[1].is_null()) continue;
        a.push_back(label_to_string(arr[0]));
        b.push_back(label_to_string(arr[1]));
    }
}

std::vector<std::vector<std::set<std::string>>> collect_alpha_units(
    const std::vector<GoldRecord>& gold, const std::string& key,
    const std::vector<size_t>& idx) {
    std::vector<std::vector<std::set<std::string>>> units;
    for (size_t i : idx) {
        const auto& labels = gold[i].annotator_labels;
        if (!labels.is_object() || !labels.contains(key)) continue;
        const auto& arr = labels.at(key);
        if (!arr.is_array()) continue;
        std::vector<std::set<std::string>> unit;
        for (const auto& rater : arr) {
            if (rater.is_null()) continue;
            std::set<std::string> value;
            if (rater.is_array()) {
                for (const auto& item : rater) value.insert(label_to_string(item));
            } else {
                value.insert(label_to_string(rater));
            }
            unit.push_back(std::move(value));
        }
        if (!unit.empty()) units.push_back(std::move(unit));
    }
    return units;
}

}  // namespace

AgreementReport compute_agreement(const std::vector<GoldRecord>& gold, int bootstrap_resamples,
                                  unsigned long long seed) {
    AgreementReport report;
    std::vector<size_t> all(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) all[i] = i;

    struct KappaSpec {
        std::string key;
        std::optional<double> AgreementReport::* slot;
    };
    const std::vector<KappaSpec> kappas = {
        {"span", &AgreementReport::span_kappa},
        {"testable", &AgreementReport::testable_kappa},
        {"hazard", &AgreementReport::hazard_kappa},
    };
    unsigned long long metric_seed = seed;
    for (const auto& item : kappas) {
        std::vector<std::string> a, b;
        collect_kappa_labels(gold, item.key, all, a, b);
        if (a.empty()) continue;
        double point = cohen_kappa(a, b);
        report.*(item.slot) = point;
        if (bootstrap_resamples >= 100) {
            auto fn = [&, key = item.key, point](const std::vector<size_t>& idx) {
                std::vector<std::string> ra, rb;
                collect_kappa_labels(gold, key, idx, ra, rb);
                if (ra.empty()) return point;
                return cohen_kappa(ra, rb);
            };
            report.ci[item.key + "_kappa"] =
                bootstrap_ci(fn, gold.size(), bootstrap_resamples, 0.95, metric_seed);
        }
        ++metric_seed;
    }

    auto units = collect_alpha_units(gold, "scope_actors", all);
    bool has_pairable = false;
    for (const auto& u : units) {
        if (u.size() >= 2) has_pairable = true;
    }
    if (has_pairable) {
        double point = krippendorff_alpha(units, AlphaDistance::jaccard);
        report.scope_actors_alpha = point;
        if (bootstrap_resamples >= 100) {
            auto fn = [&, point](const std::vector<size_t>& idx) {
                auto resampled = collect_alpha_units(gold, "scope_actors", idx);
                try {
                    return krippendorff_alpha(resampled, AlphaDistance::jaccard);
                } catch (const InputError&) {
                    return point;  // degenerate resample
                }
            };
            report.ci["scope_actors_alpha"] =
                bootstrap_ci(fn, gold.size(), bootstrap_resamples, 0.95, metric_seed);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------

BucketRates case_study_rates(const std::vector<Judgment>& judgments) {
    static const std::vector<std::string> kBuckets = {"clean", "obfuscated", "compositional"};
    std::map<std::string, std::pair<int, int>> counts;  // bucket -> (violations, total)
    int violations = 0;
    for (const auto& j : judgments) {
        if (std::find(kBuckets.begin(), kBuckets.end(), j.bucket) == kBuckets.end()) {
            throw InputError("unknown bucket: " + j.bucket);
        }
        auto& [v, t] = counts[j.bucket];
        ++t;
        if (j.violated) {
            ++v;
            ++violations;
        }
    }
    BucketRates out;
    for (const auto& bucket : kBuckets) {
        auto it = counts.find(bucket);
        if (it == counts.end() || it->second.second == 0) {
            throw InputError("empty bucket: " + bucket);
        }
        out.rate[bucket] = static_cast<double>(it->second.first) /
                           static_cast<double>(it->second.second);
    }
    out.overall = judgments.empty()
                      ? 0.0
                      : static_cast<double>(violations) / static_cast<double>(judgments.size());
    for (const auto& bucket : kBuckets) {
        if (bucket == "clean") continue;
        out.delta[bucket] = out.rate[bucket] - out.rate["clean"];
    }
    return out;
}

json bucket_rates_to_json(const BucketRates& rates) {
    json rate = json::object(), delta = json::object();
    for (const auto& [bucket, v] : rates.rate) rate[bucket] = v;
    for (const auto& [bucket, v] : rates.delta) delta[bucket] = v;
    return json{{"rate", rate}, {"overall", rates.overall}, {"delta_vs_clean", delta}};
}

JudgeRunResult judge_responses(const std::vector<CaseProbe>& probes,
                               const std::vector<std::string>& responses, const Rule& rule,
                               Provider& provider, const PromptLibrary& prompts) {
    if (probes.empty()) throw InputError("judge_responses: empty prompt list");
    if (probes.size() != responses.size()) {
        throw InputError("judge_responses: prompts and responses are not aligned");
    }
    json rule_json = rule_to_json(rule);
    JudgeRunResult out;
    for (size_t i = 0; i < probes.size(); ++i) {
        TextRequest req;
        req.task_tag = TaskTag::judge;
        req.prompt = prompts.render_named("judge_violation", {{"rule_json", rule_json.dump(2)},
                                                              {"prompt", probes[i].prompt},
                                                              {"response", responses[i]}});
        req.temperature = 0.0;
        req.payload = json{{"rule", rule_json},
                           {"prompt", probes[i].prompt},
                           {"response", responses[i]},
                           {"bucket", probes[i].bucket}};
        std::optional<bool> violated;
        try {
            TextResponse resp = provider.generate(req);
            json parsed = json::parse(text::trim(resp.text), nullptr, false);
            std::string verdict;
            if (parsed.is_object() && parsed.contains("verdict") &&
                parsed.at("verdict").is_string()) {
                verdict = text::lowercase(parsed.at("verdict").get<std::string>());
            } else {
                for (const auto& tok : text::tokens(resp.text)) {
                    if (tok == "pass" || tok == "fail") {
                        verdict = tok;
                        break;
                    }
                }
            }
            if (verdict == "pass") violated = false;
            else if (verdict == "fail") violated = true;
        } catch (const ProviderError& e) {
            std::cerr << "p2t: violation judge failed: " << e.what() << "\n";
        }
        if (!violated) {
            ++out.judge_errors;
            continue;
        }
        out.judgments.push_back({"", probes[i].bucket, *violated});
    }
    return out;
}

}  // namespace p2t
