#include "layoutforge/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "layoutforge/errors.hpp"

namespace layoutforge {

namespace {

// Pair penalty: zero when footprints are strictly apart, 0.5 when they only
// touch, rising to 1 as the smaller footprint becomes fully covered.
double pair_penalty(const Aabb& a, const Aabb& b) {
    if (a.max.x < b.min.x || b.max.x < a.min.x || a.max.y < b.min.y || b.max.y < a.min.y) return 0.0;
    const double smaller = std::min(a.footprint_area(), b.footprint_area());
    const double overlap = footprint_overlap_area(a, b);
    return 0.5 + 0.5 * (smaller > 0.0 ? std::min(1.0, overlap / smaller) : 1.0);
}

template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, int threads, Fn&& fn) {
    const std::size_t n = end - begin;
    const std::size_t workers = std::min<std::size_t>(threads > 1 ? static_cast<std::size_t>(threads) : 1, n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

int clamp_int(double v, int hi) {
    const long r = std::lround(v);
    return static_cast<int>(std::clamp<long>(r, 0, hi));
}

// Plane points come from integer corners; undo the division's rounding.
double snap(double px) {
    const double r = std::round(px);
    return std::abs(px - r) < 1e-6 ? r : px;
}

}  // namespace

void GroundingConfig::check() const {
    if (!(plane_w > 0.0) || !(plane_h > 0.0)) throw InvariantError("plane size must be positive");
    if (population < 2 || population % 2 != 0) throw InvariantError("population must be even and at least 2");
    if (generations < 1) throw InvariantError("generations must be >= 1");
    if (!(mutation_ratio >= 0.0 && mutation_ratio <= 1.0)) throw InvariantError("mutation_ratio must lie in [0, 1]");
    if (!(elite_frac > 0.0 && elite_frac < 1.0)) throw InvariantError("elite_frac must lie in (0, 1)");
    if (!(gaussian_sigma_px >= 0.0)) throw InvariantError("gaussian_sigma_px must be >= 0");
    if (!(physical_weight >= 0.0) || !(semantic_weight >= 0.0)) throw InvariantError("weights must be >= 0");
    if (threads < 1) throw InvariantError("threads must be >= 1");
}

bool SupportGraph::same_chain(const std::string& a, const std::string& b) const {
    auto descends = [this](std::string from, const std::string& to) {
        for (auto it = parent.find(from); it != parent.end(); it = parent.find(from)) {
            if (it->second == to) return true;
            from = it->second;
        }
        return false;
    };
    return descends(a, b) || descends(b, a);
}

int SupportGraph::depth(const std::string& name) const {
    int d = 0;
    std::string cur = name;
    for (auto it = parent.find(cur); it != parent.end(); it = parent.find(cur)) {
        ++d;
        cur = it->second;
    }
    return d;
}

SupportGraph build_support_graph(const TopoRelationSet& relations, const SceneSpec& scene,
                                 const RelationLibrary& lib) {
    SupportGraph g;
    for (const auto& r : relations.relations) {
        const RelationDef& def = lib.at(r.relation);
        if (def.kind != RelationKind::Relative || !def.rpc || (*def.rpc)[2] == 0) continue;
        check_arity(r, def);
        const bool up = (*def.rpc)[2] > 0;
        const std::string& child = up ? r.args[0] : r.args[1];
        const std::string& parent = up ? r.args[1] : r.args[0];
        if (!scene.find(child) || !scene.find(parent)) {
            throw InvariantError("stacking relation names an unknown object: " + r.to_string());
        }
        g.parent.emplace(child, parent);
    }

    for (const auto& [child, _] : g.parent) {
        std::vector<std::string> path{child};
        std::set<std::string> seen{child};
        for (auto it = g.parent.find(child); it != g.parent.end(); it = g.parent.find(it->second)) {
            path.push_back(it->second);
            if (!seen.insert(it->second).second) {
                std::string cycle;
                for (const auto& n : path) cycle += (cycle.empty() ? "" : " -> ") + n;
                throw GroundingError("stacking cycle: " + cycle);
            }
        }
    }

    for (const auto& obj : scene.objects) {
        double z = scene.boundary.surface_z;
        std::string cur = obj.name;
        for (auto it = g.parent.find(cur); it != g.parent.end(); it = g.parent.find(cur)) {
            z += scene.find(it->second)->size.z;
            cur = it->second;
        }
        g.z_level[obj.name] = z;
    }
    return g;
}

GroundingProblem::GroundingProblem(const SceneSpec& scene, const TopoRelationSet& relations,
                                   const RelationLibrary& lib, const SupportGraph& support,
                                   const GroundingConfig& cfg)
    : scene_(scene), lib_(lib), support_(support), cfg_(cfg) {
    scene_.check();
    cfg_.check();
    const PlaneFrame frame{scene_.boundary, cfg_.plane_w, cfg_.plane_h};
    std::map<std::string, std::size_t> index;
    for (const auto& obj : scene_.objects) {
        index[obj.name] = names_.size();
        names_.push_back(obj.name);
        const double w = obj.size.x * frame.px_per_cm_x();
        const double h = obj.size.y * frame.px_per_cm_y();
        footprint_.push_back({w, h});
        upper_.push_back({static_cast<int>(std::floor(cfg_.plane_w - w + 1e-9)),
                          static_cast<int>(std::floor(cfg_.plane_h - h + 1e-9))});
        auto z = support_.z_level.find(obj.name);
        const double z0 = z == support_.z_level.end() ? scene_.boundary.surface_z : z->second;
        z_min_.push_back(z0);
        z_max_.push_back(z0 + obj.size.z);
    }
    for (const auto& name : names_) {
        auto it = support_.parent.find(name);
        parent_.push_back(it == support_.parent.end() ? -1 : static_cast<int>(index.at(it->second)));
    }
    root_.resize(names_.size());
    descendants_.resize(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
        std::size_t cur = i;
        while (parent_[cur] >= 0) {
            cur = static_cast<std::size_t>(parent_[cur]);
            descendants_[cur].push_back(i);
        }
        root_[i] = cur;
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (std::size_t j = i + 1; j < names_.size(); ++j) {
            if (!support_.same_chain(names_[i], names_[j])) collision_pairs_.push_back({i, j});
        }
    }
    for (const auto& r : relations.relations) {
        const RelationDef& def = lib_.at(r.relation);
        check_arity(r, def);
        CompiledRelation c{r, &def, {}};
        for (const auto& a : r.args) {
            auto it = index.find(a);
            if (it == index.end()) throw InvariantError("relation names an unknown object: " + r.to_string());
            c.args.push_back(it->second);
        }
        relations_.push_back(std::move(c));
    }
}

bool GroundingProblem::in_bounds(const Genome& g) const {
    if (g.corners.size() != names_.size()) return false;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (int k = 0; k < 2; ++k) {
            if (g.corners[i][k] < 0 || g.corners[i][k] > upper_[i][k]) return false;
        }
    }
    return true;
}

Aabb GroundingProblem::plane_box(const Genome& g, std::size_t i) const {
    const double x = g.corners[i][0];
    const double y = g.corners[i][1];
    return Aabb{{x, y, z_min_[i]}, {x + footprint_[i][0], y + footprint_[i][1], z_max_[i]}};
}

GroundingProblem::Components GroundingProblem::components(const Genome& g, std::vector<double>* relation_scores) const {
    const std::size_t n = names_.size();
    thread_local std::vector<Aabb> boxes;
    thread_local std::vector<Aabb> args;
    boxes.resize(n);
    for (std::size_t i = 0; i < n; ++i) boxes[i] = plane_box(g, i);

    Components c{1.0, 1.0, 1.0, 1.0, true};

    if (!collision_pairs_.empty()) {
        double penalty = 0.0;
        for (const auto& [i, j] : collision_pairs_) penalty += pair_penalty(boxes[i], boxes[j]);
        c.collision = 1.0 - penalty / static_cast<double>(collision_pairs_.size());
    }

    std::size_t inside = 0;
    std::size_t elevated = 0;
    std::size_t stable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Aabb& b = boxes[i];
        if (b.min.x >= 0.0 && b.min.y >= 0.0 && b.max.x <= cfg_.plane_w && b.max.y <= cfg_.plane_h) ++inside;
        if (parent_[i] >= 0) {
            ++elevated;
            if (footprint_contains(boxes[static_cast<std::size_t>(parent_[i])], b)) ++stable;
        }
    }
    c.boundary = static_cast<double>(inside) / static_cast<double>(n);
    if (elevated) c.stability = static_cast<double>(stable) / static_cast<double>(elevated);

    if (!relations_.empty()) {
        double sum = 0.0;
        for (const auto& r : relations_) {
            args.clear();
            for (std::size_t a : r.args) args.push_back(boxes[a]);
            const double s = score_plane(*r.def, args, cfg_.plane_w, cfg_.plane_h);
            if (s < 1.0) c.relations_full = false;
            if (relation_scores) relation_scores->push_back(s);
            sum += s;
        }
        c.relations_mean = sum / static_cast<double>(relations_.size());
    }
    return c;
}

double GroundingProblem::evaluate(const Genome& g, bool* full) const {
    const Components c = components(g, nullptr);
    if (full) *full = c.collision == 1.0 && c.boundary == 1.0 && c.stability == 1.0 && c.relations_full;
    return cfg_.physical_weight * (c.collision + c.boundary + c.stability) / 3.0 +
           cfg_.semantic_weight * c.relations_mean;
}

FitnessBreakdown GroundingProblem::breakdown(const Genome& g) const {
    std::vector<double> scores;
    const Components c = components(g, &scores);
    FitnessBreakdown out;
    out.collision_score = c.collision;
    out.boundary_score = c.boundary;
    out.stability_score = c.stability;
    for (std::size_t k = 0; k < relations_.size(); ++k) out.relation_scores[relations_[k].instance] = scores[k];
    out.total = evaluate(g, &out.is_full);
    return out;
}

FitnessBreakdown fitness(const Genome& g, const GroundingProblem& problem) { return problem.breakdown(g); }

std::uint64_t genome_hash(const Genome& g) {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& c : g.corners) {
        for (int v : c) {
            auto u = static_cast<std::uint32_t>(v);
            for (int b = 0; b < 4; ++b) {
                h ^= (u >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        }
    }
    return h;
}

Population init_population(const DiscretePoseSet& poses, const GroundingProblem& problem) {
    const GroundingConfig& cfg = problem.config();
    const std::size_t n = problem.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto fp = problem.footprint_px(i);
        if (fp[0] > cfg.plane_w + 1e-9 || fp[1] > cfg.plane_h + 1e-9) {
            throw GroundingError("object larger than surface: " + problem.names()[i]);
        }
    }

    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    bool first = true;
    for (const auto& name : problem.names()) {
        if (!poses.contains(name)) continue;
        const auto& p = poses.at(name);
        if (first) {
            min_x = max_x = p[0];
            min_y = max_y = p[1];
            first = false;
        }
        min_x = std::min(min_x, p[0]);
        max_x = std::max(max_x, p[0]);
        min_y = std::min(min_y, p[1]);
        max_y = std::max(max_y, p[1]);
    }
    // One lattice step is the widest footprint plus a mid-band gap, shrunk
    // when the lattice would not fit; the lattice is centered on the plane.
    double widest[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        widest[0] = std::max(widest[0], problem.footprint_px(i)[0]);
        widest[1] = std::max(widest[1], problem.footprint_px(i)[1]);
    }
    const double gap = 0.035 * cfg.plane_w;
    auto step_for = [&](int lo, int hi, double extent, double wide) {
        const double natural = wide + gap;
        return hi == lo ? natural : std::min(natural, 0.9 * extent / static_cast<double>(hi - lo));
    };
    const double step_x = step_for(min_x, max_x, cfg.plane_w, widest[0]);
    const double step_y = step_for(min_y, max_y, cfg.plane_h, widest[1]);
    auto map_axis = [](int v, int lo, int hi, double extent, double step) {
        return 0.5 * extent + (static_cast<double>(v) - 0.5 * static_cast<double>(lo + hi)) * step;
    };

    std::vector<std::array<double, 2>> centers(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& name = problem.names()[i];
        if (poses.contains(name)) {
            const auto& p = poses.at(name);
            centers[i] = {map_axis(p[0], min_x, max_x, cfg.plane_w, step_x),
                          map_axis(p[1], min_y, max_y, cfg.plane_h, step_y)};
        } else {
            centers[i] = {0.5 * cfg.plane_w, 0.5 * cfg.plane_h};
        }
    }

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> jitter(-cfg.gaussian_sigma_px, cfg.gaussian_sigma_px);
    Population pop;
    pop.genomes.resize(static_cast<std::size_t>(cfg.population));
    for (auto& g : pop.genomes) {
        g.corners.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto fp = problem.footprint_px(i);
            const auto hi = problem.upper_bound(i);
            g.corners[i] = {clamp_int(centers[i][0] - 0.5 * fp[0] + jitter(rng), hi[0]),
                            clamp_int(centers[i][1] - 0.5 * fp[1] + jitter(rng), hi[1])};
        }
    }
    return pop;
}

EvolveResult evolve(Population population, const GroundingProblem& problem) {
    const GroundingConfig& cfg = problem.config();
    auto& genomes = population.genomes;
    if (genomes.empty()) throw InvariantError("evolve needs a non-empty population");
    const std::size_t pop_size = genomes.size();
    const std::size_t n = problem.size();
    const std::size_t elite_n =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(cfg.elite_frac * static_cast<double>(pop_size))),
                                1, pop_size);

    std::vector<double> fit(pop_size);
    std::vector<char> full(pop_size, 0);
    std::vector<std::uint64_t> hash(pop_size);
    auto score = [&](std::size_t i) {
        bool f = false;
        fit[i] = problem.evaluate(genomes[i], &f);
        full[i] = f ? 1 : 0;
        hash[i] = genome_hash(genomes[i]);
    };
    parallel_for(0, pop_size, cfg.threads, score);

    std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, cfg.gaussian_sigma_px > 0.0 ? cfg.gaussian_sigma_px : 1.0);

    EvolveResult result;
    std::vector<std::size_t> order(pop_size);
    std::vector<char> pick(n, 0);
    for (int gen = 1; gen <= cfg.generations; ++gen) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (fit[a] != fit[b]) return fit[a] > fit[b];
            return hash[a] < hash[b];
        });

        const std::size_t top = order.front();
        if (result.best.corners.empty() || fit[top] > result.best_history.back()) {
            result.best = genomes[top];
        }
        result.best_history.push_back(std::max(fit[top], result.best_history.empty() ? fit[top] : result.best_history.back()));
        result.generations_used = gen;
        if (full[top] || gen == cfg.generations) break;

        std::vector<Genome> next(pop_size);
        std::vector<double> next_fit(pop_size);
        std::vector<char> next_full(pop_size);
        std::vector<std::uint64_t> next_hash(pop_size);
        for (std::size_t k = 0; k < elite_n; ++k) {
            next[k] = genomes[order[k]];
            next_fit[k] = fit[order[k]];
            next_full[k] = full[order[k]];
            next_hash[k] = hash[order[k]];
        }
        for (std::size_t k = elite_n; k < pop_size; ++k) {
            const std::size_t a = order[rng() % elite_n];
            std::size_t b = order[rng() % elite_n];
            if (elite_n > 1) {
                while (b == a) b = order[rng() % elite_n];
            }
            // Genes are inherited per stack so a top object stays with its support.
            Genome child;
            child.corners.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (problem.chain_root(i) == i) pick[i] = static_cast<char>(rng() & 1u);
            }
            for (std::size_t i = 0; i < n; ++i) {
                child.corners[i] = pick[problem.chain_root(i)] ? genomes[a].corners[i] : genomes[b].corners[i];
            }
            if (n > 0 && unit(rng) < cfg.mutation_ratio) {
                const std::size_t i = rng() % n;
                const auto hi = problem.upper_bound(i);
                const std::array<int, 2> before = child.corners[i];
                if (rng() & 1u) {
                    child.corners[i] = {static_cast<int>(rng() % static_cast<std::uint64_t>(hi[0] + 1)),
                                        static_cast<int>(rng() % static_cast<std::uint64_t>(hi[1] + 1))};
                } else {
                    child.corners[i] = {clamp_int(child.corners[i][0] + gauss(rng), hi[0]),
                                        clamp_int(child.corners[i][1] + gauss(rng), hi[1])};
                }
                const int dx = child.corners[i][0] - before[0];
                const int dy = child.corners[i][1] - before[1];
                for (std::size_t d : problem.descendants(i)) {
                    const auto dhi = problem.upper_bound(d);
                    child.corners[d] = {clamp_int(child.corners[d][0] + dx, dhi[0]), clamp_int(child.corners[d][1] + dy, dhi[1])};
                }
            }
            next[k] = std::move(child);
        }
        genomes = std::move(next);
        fit = std::move(next_fit);
        full = std::move(next_full);
        hash = std::move(next_hash);
        parallel_for(elite_n, pop_size, cfg.threads, score);
    }
    result.fitness = problem.breakdown(result.best);
    return result;
}

std::map<std::string, PlanePoint> normalize(const Genome& best, const GroundingProblem& problem) {
    const GroundingConfig& cfg = problem.config();
    std::map<std::string, PlanePoint> out;
    for (std::size_t i = 0; i < problem.size(); ++i) {
        out[problem.names()[i]] = {best.corners[i][0] / cfg.plane_w, best.corners[i][1] / cfg.plane_h};
    }
    return out;
}

Layout to_bbox(const std::map<std::string, PlanePoint>& plane_points, const SceneSpec& scene,
               const SupportGraph& support, const GroundingConfig& cfg) {
    const PlaneFrame frame{scene.boundary, cfg.plane_w, cfg.plane_h};
    Layout layout;
    for (const auto& obj : scene.objects) {
        auto it = plane_points.find(obj.name);
        if (it == plane_points.end()) throw InvariantError("no plane point for " + obj.name);
        const double min_x = frame.x_to_cm(snap(it->second.u * cfg.plane_w));
        const double min_y = frame.y_to_cm(snap(it->second.v * cfg.plane_h));
        auto z = support.z_level.find(obj.name);
        const double min_z = z == support.z_level.end() ? scene.boundary.surface_z : z->second;
        Pose pose;
        pose.position = {min_x + 0.5 * obj.size.x, min_y + 0.5 * obj.size.y, min_z + 0.5 * obj.size.z};
        layout.place(obj.name, pose, obj.size, it->second);
    }
    return layout;
}

GroundingResult ground(const DiscretePoseSet& poses, const TopoRelationSet& relations, const RelationLibrary& lib,
                       const SceneSpec& scene, const GroundingConfig& cfg) {
    const SupportGraph support = build_support_graph(relations, scene, lib);
    const GroundingProblem problem(scene, relations, lib, support, cfg);
    GroundingResult out;
    out.evolution = evolve(init_population(poses, problem), problem);
    out.layout = to_bbox(normalize(out.evolution.best, problem), scene, support, cfg);
    return out;
}

}  // namespace layoutforge
