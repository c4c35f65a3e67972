#include "p2t/dedup.hpp"

#include "p2t/text.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace p2t {

json dedup_report_to_json(const DedupReport& report) {
    json merges = json::array();
    for (const auto& m : report.merges) {
        merges.push_back({{"kept_rule_id", m.kept_rule_id},
                          {"absorbed_rule_ids", m.absorbed_rule_ids},
                          {"method", m.method},
                          {"similarity", m.similarity}});
    }
    return json{{"kept", report.kept},
                {"removed", report.removed},
                {"dup_idx", report.dup_idx},
                {"merges", merges}};
}

double dup_index(long kept, long removed) {
    if (kept + removed <= 0) return 0.0;
    return static_cast<double>(removed) / static_cast<double>(kept + removed);
}

namespace {

void absorb(Rule& survivor, const Rule& absorbed) {
    std::set<std::pair<std::string, std::string>> seen;
    seen.insert({survivor.source.citation, survivor.source.span_id});
    for (const auto& s : survivor.source.additional_spans) {
        seen.insert({s.citation, s.span_id});
    }
    auto add = [&](const std::string& citation, const std::string& span_id) {
        if (seen.insert({citation, span_id}).second) {
            survivor.source.additional_spans.push_back({citation, span_id});
        }
    };
    add(absorbed.source.citation, absorbed.source.span_id);
    for (const auto& s : absorbed.source.additional_spans) add(s.citation, s.span_id);

    if (absorbed.confidence &&
        (!survivor.confidence || *absorbed.confidence > *survivor.confidence)) {
        survivor.confidence = absorbed.confidence;
    }
    // Evidence artifacts are unioned; the survivor keeps its other fields.
    std::set<std::string> evidence(survivor.evidence.begin(), survivor.evidence.end());
    for (const auto& e : absorbed.evidence) evidence.insert(e);
    survivor.evidence.assign(evidence.begin(), evidence.end());
}

void sort_spans(Rule& rule) {
    std::sort(rule.source.additional_spans.begin(), rule.source.additional_spans.end(),
              [](const SpanRef& a, const SpanRef& b) {
                  return std::tie(a.span_id, a.citation) < std::tie(b.span_id, b.citation);
              });
}

}  // namespace

std::pair<std::vector<Rule>, std::vector<Merge>> structural_dedup(
    const std::vector<Rule>& rules) {
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t i = 0; i < rules.size(); ++i) {
        groups[canonical_signature(rules[i])].push_back(i);
    }
    std::vector<Rule> out;
    std::vector<Merge> merges;
    for (auto& [_, idxs] : groups) {
        std::sort(idxs.begin(), idxs.end(), [&](size_t a, size_t b) {
            return rules[a].rule_id < rules[b].rule_id;
        });
        Rule survivor = rules[idxs.front()];
        if (idxs.size() > 1) {
            Merge merge;
            merge.kept_rule_id = survivor.rule_id;
            merge.method = "structural";
            merge.similarity = 1.0;
            for (size_t k = 1; k < idxs.size(); ++k) {
                absorb(survivor, rules[idxs[k]]);
                merge.absorbed_rule_ids.push_back(rules[idxs[k]].rule_id);
            }
            merges.push_back(std::move(merge));
        }
        sort_spans(survivor);
        out.push_back(std::move(survivor));
    }
    std::sort(out.begin(), out.end(),
              [](const Rule& a, const Rule& b) { return a.rule_id < b.rule_id; });
    std::sort(merges.begin(), merges.end(),
              [](const Merge& a, const Merge& b) { return a.kept_rule_id < b.kept_rule_id; });
    return {std::move(out), std::move(merges)};
}

namespace {

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);  // keep the smaller index as root
        parent[b] = a;
        return true;
    }
};

std::string embedding_text(const Rule& rule) {
    std::string out = rule.hazard + " " + rule.requirement;
    for (const auto& c : rule.conditions) out += " " + c;
    for (const auto& e : rule.exceptions) out += " " + e;
    return out;
}

}  // namespace

std::pair<std::vector<Rule>, std::vector<Merge>> semantic_dedup(const std::vector<Rule>& rules,
                                                                double threshold,
                                                                Provider& provider) {
    // Block by (doc, sorted actor list): paraphrases merge only within a
    // document and actor scope.
    std::map<std::string, std::vector<size_t>> blocks;
    for (size_t i = 0; i < rules.size(); ++i) {
        std::vector<std::string> actors = rules[i].scope.actor;
        std::sort(actors.begin(), actors.end());
        std::string key = rules[i].source.doc + "\x1f";
        for (const auto& a : actors) {
            key += a;
            key.push_back(',');
        }
        blocks[key].push_back(i);
    }

    std::vector<Rule> out;
    std::vector<Merge> merges;
    for (auto& [_, idxs] : blocks) {
        std::sort(idxs.begin(), idxs.end(), [&](size_t a, size_t b) {
            return rules[a].rule_id < rules[b].rule_id;
        });
        if (idxs.size() == 1) {
            out.push_back(rules[idxs.front()]);
            continue;
        }
        std::vector<std::vector<double>> vecs;
        vecs.reserve(idxs.size());
        for (size_t i : idxs) vecs.push_back(provider.embed(embedding_text(rules[i])));

        struct Edge {
            double sim;
            size_t a, b;  // positions within the block
        };
        std::vector<Edge> edges;
        for (size_t a = 0; a < idxs.size(); ++a) {
            for (size_t b = a + 1; b < idxs.size(); ++b) {
                double sim = cosine(vecs[a], vecs[b]);
                if (sim >= threshold - 1e-12) edges.push_back({sim, a, b});
            }
        }
        std::sort(edges.begin(), edges.end(), [&](const Edge& x, const Edge& y) {
            if (x.sim != y.sim) return x.sim > y.sim;
            return std::tie(rules[idxs[x.a]].rule_id, rules[idxs[x.b]].rule_id) <
                   std::tie(rules[idxs[y.a]].rule_id, rules[idxs[y.b]].rule_id);
        });

        UnionFind uf(idxs.size());
        std::map<size_t, double> cluster_min_sim;  // root -> weakest merging edge
        for (const auto& e : edges) {
            size_t ra = uf.find(e.a);
            size_t rb = uf.find(e.b);
            if (ra == rb) continue;
            double prev = 1.0;
            if (cluster_min_sim.count(ra)) prev = std::min(prev, cluster_min_sim[ra]);
            if (cluster_min_sim.count(rb)) prev = std::min(prev, cluster_min_sim[rb]);
            uf.unite(e.a, e.b);
            cluster_min_sim[uf.find(e.a)] = std::min(prev, e.sim);
        }

        std::map<size_t, std::vector<size_t>> clusters;  // root -> positions
        for (size_t p = 0; p < idxs.size(); ++p) clusters[uf.find(p)].push_back(p);
        for (auto& [root, members] : clusters) {
            Rule survivor = rules[idxs[members.front()]];  // smallest rule_id: sorted order
            if (members.size() > 1) {
                Merge merge;
                merge.kept_rule_id = survivor.rule_id;
                merge.method = "semantic";
                merge.similarity = cluster_min_sim.count(root) ? cluster_min_sim[root] : 1.0;
                for (size_t k = 1; k < members.size(); ++k) {
                    absorb(survivor, rules[idxs[members[k]]]);
                    merge.absorbed_rule_ids.push_back(rules[idxs[members[k]]].rule_id);
                }
                merges.push_back(std::move(merge));
            }
            sort_spans(survivor);
            out.push_back(std::move(survivor));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Rule& a, const Rule& b) { return a.rule_id < b.rule_id; });
    std::sort(merges.begin(), merges.end(),
              [](const Merge& a, const Merge& b) { return a.kept_rule_id < b.kept_rule_id; });
    return {std::move(out), std::move(merges)};
}

DedupReport dedup_rules(std::vector<Rule>& rules, double threshold, Provider& provider,
                        bool semantic) {
    size_t input = rules.size();
    auto [structural, structural_merges] = structural_dedup(rules);
    DedupReport report;
    report.merges = std::move(structural_merges);
    if (semantic) {
        auto [unique_rules, semantic_merges] = semantic_dedup(structural, threshold, provider);
        rules = std::move(unique_rules);
        for (auto& m : semantic_merges) report.merges.push_back(std::move(m));
    } else {
        rules = std::move(structural);
    }
    report.kept = static_cast<int>(rules.size());
    report.removed = static_cast<int>(input - rules.size());
    report.dup_idx = dup_index(report.kept, report.removed);
    return report;
}

}  // namespace p2t
