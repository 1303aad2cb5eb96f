#pragma once
// Off-policy training on the skill world. One environment step is one macro
// action: the policy emits a normalized 14-vector, the sequencer expands it
// into sub-skills, and the agent sees only the observation after the whole
// macro finished. Everything here is single-threaded and seed-deterministic;
// two runs with the same scenario and seed produce identical weights.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "snapfit/io.hpp"
#include "snapfit/mlp.hpp"
#include "snapfit/random.hpp"
#include "snapfit/scenario.hpp"
#include "snapfit/skills.hpp"
#include "snapfit/world.hpp"

namespace snapfit {

inline constexpr int kObsDim = 13;
inline constexpr int kActDim = static_cast<int>(Action::kDim);

// Sensor channels are brought to comparable magnitude before they reach the
// networks: positions against the approach scale, forces against a firm
// contact load, moments as-is (they are already order one or less).
inline constexpr double kPosScale = 0.05;
inline constexpr double kForceScale = 20.0;
inline constexpr double kMomentScale = 1.0;

inline Vec normalize_observation(const Observation& o) {
    Vec v(kObsDim);
    v[0] = o.p_rel[0] / kPosScale;
    v[1] = o.p_rel[1] / kPosScale;
    v[2] = o.p_rel[2] / kPosScale;
    for (int i = 0; i < 4; ++i) v[3 + i] = o.quat[i];
    for (int i = 0; i < 3; ++i) v[7 + i] = o.wrench[i] / kForceScale;
    for (int i = 0; i < 3; ++i) v[10 + i] = o.wrench[3 + i] / kMomentScale;
    return v;
}

struct Transition {
    std::array<double, kObsDim> obs{};
    std::array<double, kActDim> act{};
    double reward = 0.0;
    std::array<double, kObsDim> next_obs{};
    // True termination only. Running out of skill budget truncates the
    // episode but the state itself is not absorbing, so the target still
    // bootstraps through it.
    bool terminal = false;
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
        data_.reserve(std::min<std::size_t>(capacity_, 4096));
    }

    void push(const Transition& t) {
        if (data_.size() < capacity_) {
            data_.push_back(t);
        } else {
            data_[head_] = t;  // overwrite oldest
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& sample(Rng& rng) const {
        if (data_.empty()) throw std::logic_error("sampling an empty replay buffer");
        return data_[rng.index(data_.size())];
    }

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
};

// Gym-style wrapper: reset randomizes the rail, step executes one macro and
// charges it against the skill budget. Stepping a finished episode is a
// caller bug and is reported as one.
class SkillEnv {
  public:
    SkillEnv(const Scenario& s, std::uint64_t seed) : scenario_(s), world_(s, seed) {
        done_ = true;
    }

    Vec reset() {
        world_.reset();
        return begin_episode();
    }

    Vec reset(const RailConfig& rail) {
        world_.reset(rail);
        return begin_episode();
    }

    struct StepOut {
        Vec obs;
        double reward = 0.0;
        bool done = false;
        bool truncated = false;  // budget ran out in a non-absorbing state
        bool success = false;
        bool force_limit = false;
        bool tunneling = false;
    };

    StepOut step(const Action& a) {
        if (done_) throw std::runtime_error("episode finished");
        const DecodedAction d = decode_action(a, scenario_.skills);
        const auto& seq = d.pivot_only ? pivot_sequence() : terminal_sequence();

        StepOut out;
        for (SkillKind kind : seq) {
            const SkillLog log =
                exec_skill(world_, kind, d.params, scenario_.skills.timeout, false);
            ++skills_used_;
            out.tunneling |= log.tunneling;
            if (log.stop == StopReason::force_limit) {
                out.force_limit = true;
                break;
            }
        }
        ++macros_used_;
        world_.state().skill_budget_remaining -= 1;

        out.reward = world_.reward() - (out.tunneling ? 2.0 : 0.0);
        out.success = world_.is_success();
        const bool exhausted = world_.state().skill_budget_remaining <= 0;
        out.done = out.success || out.force_limit || exhausted;
        // Only success is an absorbing state of the task. Budget exhaustion
        // and the force-limit abort are interventions that cut the episode
        // short, so their transitions bootstrap through the final state;
        // otherwise an early crash would look cheaper than failing slowly
        // and the optimizer would happily learn to slam into the rail.
        out.truncated = out.done && !out.success;
        out.obs = normalize_observation(world_.sense());
        done_ = out.done;
        return out;
    }

    bool done() const { return done_; }
    int macros_used() const { return macros_used_; }
    long long skills_used() const { return skills_used_; }
    World& world() { return world_; }
    const Scenario& scenario() const { return scenario_; }

  private:
    Vec begin_episode() {
        done_ = false;
        macros_used_ = 0;
        return normalize_observation(world_.sense());
    }

    Scenario scenario_;
    World world_;
    bool done_ = true;
    int macros_used_ = 0;
    long long skills_used_ = 0;
};

inline Action to_action(const Vec& v) {
    if (v.size() != kActDim) throw std::invalid_argument("action size");
    std::array<double, Action::kDim> flat{};
    for (int i = 0; i < kActDim; ++i) flat[static_cast<std::size_t>(i)] = v[i];
    return Action::from_flat(flat);
}

namespace detail {

inline Vec to_vec(const std::array<double, kObsDim>& a) {
    Vec v(kObsDim);
    for (int i = 0; i < kObsDim; ++i) v[i] = a[static_cast<std::size_t>(i)];
    return v;
}

inline std::array<double, kObsDim> to_obs_array(const Vec& v) {
    std::array<double, kObsDim> a{};
    for (int i = 0; i < kObsDim; ++i) a[static_cast<std::size_t>(i)] = v[i];
    return a;
}

inline std::array<double, kActDim> to_act_array(const Vec& v) {
    std::array<double, kActDim> a{};
    for (int i = 0; i < kActDim; ++i) a[static_cast<std::size_t>(i)] = v[i];
    return a;
}

struct AdamScalar {
    double lr = 3e-4;
    double m = 0.0, v = 0.0;
    long long t = 0;

    void step(double& x, double g) {
        ++t;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
        const double vh = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
        x -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
};

inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("divergence: non-finite ") + what);
}

}  // namespace detail

struct UpdateInfo {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    bool actor_updated = false;
};

// Soft actor-critic with a squashed Gaussian policy, twin critics, and
// automatic temperature tuning against the -dim(A) entropy target.
class SacAgent {
  public:
    SacAgent(const Scenario::Train& cfg, std::uint64_t seed)
        : cfg_(cfg), rng_(seed) {
        actor_ = make_mlp({kObsDim, 64, 64, 2 * kActDim}, rng_);
        q1_ = make_mlp({kObsDim + kActDim, 64, 64, 1}, rng_);
        q2_ = make_mlp({kObsDim + kActDim, 64, 64, 1}, rng_);
        q1t_ = q1_;
        q2t_ = q2_;
        opt_actor_.lr = opt_q1_.lr = opt_q2_.lr = opt_alpha_.lr = cfg.lr;
        opt_actor_.init_like(actor_);
        opt_q1_.init_like(q1_);
        opt_q2_.init_like(q2_);
    }

    static constexpr double kLogStdMin = -20.0;
    static constexpr double kLogStdMax = 2.0;

    Vec act_explore(const Vec& obs) {
        Vec a(kActDim), logstd(kActDim), eps(kActDim);
        double logp;
        sample_policy(obs, a, logstd, eps, logp, nullptr);
        return a;
    }

    Vec act_greedy(const Vec& obs) const {
        const Vec out = mlp_forward(actor_, obs);
        Vec a(kActDim);
        for (int i = 0; i < kActDim; ++i) a[i] = std::tanh(out[i]);
        return a;
    }

    UpdateInfo update(const ReplayBuffer& buf, Rng& sample_rng) {
        const int batch =
            static_cast<int>(std::min<std::size_t>(buf.size(), cfg_.batch_size));
        if (batch == 0) return {};
        const double alpha = std::exp(log_alpha_);
        const double inv_b = 1.0 / batch;

        MlpGrads g1, g2, ga;
        g1.init_like(q1_);
        g2.init_like(q2_);
        ga.init_like(actor_);
        MlpGrads scratch;  // parameter grads of a frozen net, discarded
        double critic_loss = 0.0, actor_loss = 0.0, alpha_grad = 0.0;

        std::vector<const Transition*> batch_items;
        batch_items.reserve(batch);
        for (int k = 0; k < batch; ++k) batch_items.push_back(&buf.sample(sample_rng));

        // Critic regression toward the entropy-adjusted bootstrap target.
        for (const Transition* tr : batch_items) {
            const Vec s = detail::to_vec(tr->obs);
            const Vec s2 = detail::to_vec(tr->next_obs);
            Vec sa(kObsDim + kActDim);
            sa << s, Eigen::Map<const Vec>(tr->act.data(), kActDim);

            Vec a2(kActDim), logstd2(kActDim), eps2(kActDim);
            double logp2;
            sample_policy(s2, a2, logstd2, eps2, logp2, nullptr);
            Vec s2a2(kObsDim + kActDim);
            s2a2 << s2, a2;
            const double q1t = mlp_forward(q1t_, s2a2)[0];
            const double q2t = mlp_forward(q2t_, s2a2)[0];
            const double y =
                tr->reward + cfg_.gamma * (tr->terminal ? 0.0
                                                        : std::min(q1t, q2t) - alpha * logp2);

            MlpCache c1, c2;
            const double q1 = mlp_forward(q1_, sa, &c1)[0];
            const double q2 = mlp_forward(q2_, sa, &c2)[0];
            critic_loss += 0.5 * ((q1 - y) * (q1 - y) + (q2 - y) * (q2 - y)) * inv_b;
            Vec dy(1);
            dy[0] = (q1 - y) * inv_b;
            mlp_backward(q1_, c1, dy, g1);
            dy[0] = (q2 - y) * inv_b;
            mlp_backward(q2_, c2, dy, g2);
        }
        detail::check_finite(critic_loss, "critic loss");
        opt_q1_.step(q1_, g1);
        opt_q2_.step(q2_, g2);

        // Policy ascent on min-Q minus entropy cost, through the updated
        // critics. The reparameterized sample keeps the noise fixed while
        // gradients flow into mean and spread.
        for (const Transition* tr : batch_items) {
            const Vec s = detail::to_vec(tr->obs);
            Vec a(kActDim), logstd(kActDim), eps(kActDim);
            double logp;
            MlpCache actor_cache;
            sample_policy(s, a, logstd, eps, logp, &actor_cache);

            Vec sa(kObsDim + kActDim);
            sa << s, a;
            MlpCache c1, c2;
            const double q1 = mlp_forward(q1_, sa, &c1)[0];
            const double q2 = mlp_forward(q2_, sa, &c2)[0];
            scratch.init_like(q1_);
            Vec dy(1);
            dy[0] = 1.0;
            const Vec dsa = (q1 <= q2) ? mlp_backward(q1_, c1, dy, scratch)
                                       : mlp_backward(q2_, c2, dy, scratch);

            actor_loss += (alpha * logp - std::min(q1, q2)) * inv_b;
            alpha_grad += -(logp + target_entropy()) * inv_b;

            // Head gradient: out = [mean, raw logstd]. Sum over components of
            // alpha * dlogp - dQmin, mapped through a = tanh(mean + std*eps).
            Vec dout = Vec::Zero(2 * kActDim);
            for (int i = 0; i < kActDim; ++i) {
                const double ai = a[i];
                const double one_m_a2 = 1.0 - ai * ai;
                const double u = one_m_a2 + 1e-6;
                const double std_i = std::exp(logstd[i]);
                const double dlogp_dz = 2.0 * ai * one_m_a2 / u;
                const double dq_da = dsa[kObsDim + i];
                const double dL_dz = (alpha * dlogp_dz - dq_da * one_m_a2) * inv_b;
                dout[i] = dL_dz;
                const double dL_dlogstd =
                    (alpha * (-1.0 + dlogp_dz * std_i * eps[i]) -
                     dq_da * one_m_a2 * std_i * eps[i]) *
                    inv_b;
                // Hard clamp on the spread: outside the active band the
                // parameter has no local effect, so no gradient either.
                const double raw = actor_head_raw_logstd(actor_cache, i);
                dout[kActDim + i] =
                    (raw > kLogStdMin && raw < kLogStdMax) ? dL_dlogstd : 0.0;
            }
            mlp_backward(actor_, actor_cache, dout, ga);
        }
        detail::check_finite(actor_loss, "actor loss");
        opt_actor_.step(actor_, ga);
        // temperature is optimized in log space: dL/dlog(a) = a * dL/da
        opt_alpha_.step(log_alpha_, alpha * alpha_grad);
        detail::check_finite(log_alpha_, "temperature");

        soft_update(q1t_, q1_, cfg_.tau);
        soft_update(q2t_, q2_, cfg_.tau);
        return {critic_loss, actor_loss, std::exp(log_alpha_), true};
    }

    double target_entropy() const { return -static_cast<double>(kActDim); }
    double alpha() const { return std::exp(log_alpha_); }
    const Mlp& actor() const { return actor_; }
    Mlp& actor() { return actor_; }
    const Mlp& critic1() const { return q1_; }
    const Mlp& critic1_target() const { return q1t_; }

    double critic_value(const Vec& obs, const Vec& act) const {
        Vec sa(kObsDim + kActDim);
        sa << obs, act;
        return mlp_forward(q1_, sa)[0];
    }

  private:
    // Draws a = tanh(mean + std * eps) and its log density under the
    // squashed Gaussian. The raw head is cached when the caller plans to
    // backpropagate.
    void sample_policy(const Vec& obs, Vec& a, Vec& logstd, Vec& eps, double& logp,
                       MlpCache* cache) {
        const Vec out = mlp_forward(actor_, obs, cache);
        logp = 0.0;
        constexpr double kLogRoot2Pi = 0.918938533204672742;  // log sqrt(2 pi)
        for (int i = 0; i < kActDim; ++i) {
            const double raw = out[kActDim + i];
            logstd[i] = std::clamp(raw, kLogStdMin, kLogStdMax);
            const double std_i = std::exp(logstd[i]);
            eps[i] = rng_.normal();
            const double z = out[i] + std_i * eps[i];
            a[i] = std::tanh(z);
            logp += -kLogRoot2Pi - logstd[i] - 0.5 * eps[i] * eps[i] -
                    std::log(1.0 - a[i] * a[i] + 1e-6);
        }
    }

    static double actor_head_raw_logstd(const MlpCache& cache, int i) {
        return cache.post.back()[kActDim + i];
    }

    Scenario::Train cfg_;
    Rng rng_;
    Mlp actor_, q1_, q2_, q1t_, q2t_;
    Adam opt_actor_, opt_q1_, opt_q2_;
    detail::AdamScalar opt_alpha_;
    // Returns live in [-8, 0] while the log density of a 14-dim squashed
    // Gaussian reaches tens; a unit starting temperature would let entropy
    // drown the value signal for thousands of updates. Start low and let the
    // tuner climb if the policy over-commits.
    double log_alpha_ = std::log(0.05);
};

// Twin-delayed DDPG: deterministic tanh policy, smoothed target actions,
// critics updated every step and the actor every second one.
class Td3Agent {
  public:
    Td3Agent(const Scenario::Train& cfg, std::uint64_t seed)
        : cfg_(cfg), rng_(seed) {
        actor_ = make_mlp({kObsDim, 64, 64, kActDim}, rng_);
        q1_ = make_mlp({kObsDim + kActDim, 64, 64, 1}, rng_);
        q2_ = make_mlp({kObsDim + kActDim, 64, 64, 1}, rng_);
        actor_t_ = actor_;
        q1t_ = q1_;
        q2t_ = q2_;
        opt_actor_.lr = opt_q1_.lr = opt_q2_.lr = cfg.lr;
        opt_actor_.init_like(actor_);
        opt_q1_.init_like(q1_);
        opt_q2_.init_like(q2_);
    }

    static constexpr double kExploreStd = 0.1;
    static constexpr double kTargetStd = 0.2;
    static constexpr double kTargetClip = 0.5;
    static constexpr int kPolicyDelay = 2;

    Vec act_explore(const Vec& obs) {
        Vec a = act_greedy(obs);
        for (int i = 0; i < kActDim; ++i)
            a[i] = std::clamp(a[i] + rng_.normal(0.0, kExploreStd), -1.0, 1.0);
        return a;
    }

    Vec act_greedy(const Vec& obs) const {
        const Vec out = mlp_forward(actor_, obs);
        Vec a(kActDim);
        for (int i = 0; i < kActDim; ++i) a[i] = std::tanh(out[i]);
        return a;
    }

    UpdateInfo update(const ReplayBuffer& buf, Rng& sample_rng) {
        const int batch =
            static_cast<int>(std::min<std::size_t>(buf.size(), cfg_.batch_size));
        if (batch == 0) return {};
        const double inv_b = 1.0 / batch;

        MlpGrads g1, g2;
        g1.init_like(q1_);
        g2.init_like(q2_);
        double critic_loss = 0.0;

        std::vector<const Transition*> batch_items;
        batch_items.reserve(batch);
        for (int k = 0; k < batch; ++k) batch_items.push_back(&buf.sample(sample_rng));

        for (const Transition* tr : batch_items) {
            const Vec s2 = detail::to_vec(tr->next_obs);
            const Vec out_t = mlp_forward(actor_t_, s2);
            Vec a2(kActDim);
            for (int i = 0; i < kActDim; ++i) {
                const double noise =
                    std::clamp(rng_.normal(0.0, kTargetStd), -kTargetClip, kTargetClip);
                a2[i] = std::clamp(std::tanh(out_t[i]) + noise, -1.0, 1.0);
            }
            Vec s2a2(kObsDim + kActDim);
            s2a2 << s2, a2;
            const double y =
                tr->reward +
                cfg_.gamma * (tr->terminal
                                  ? 0.0
                                  : std::min(mlp_forward(q1t_, s2a2)[0],
                                             mlp_forward(q2t_, s2a2)[0]));

            Vec sa(kObsDim + kActDim);
            sa << detail::to_vec(tr->obs), Eigen::Map<const Vec>(tr->act.data(), kActDim);
            MlpCache c1, c2;
            const double q1 = mlp_forward(q1_, sa, &c1)[0];
            const double q2 = mlp_forward(q2_, sa, &c2)[0];
            critic_loss += 0.5 * ((q1 - y) * (q1 - y) + (q2 - y) * (q2 - y)) * inv_b;
            Vec dy(1);
            dy[0] = (q1 - y) * inv_b;
            mlp_backward(q1_, c1, dy, g1);
            dy[0] = (q2 - y) * inv_b;
            mlp_backward(q2_, c2, dy, g2);
        }
        detail::check_finite(critic_loss, "critic loss");
        opt_q1_.step(q1_, g1);
        opt_q2_.step(q2_, g2);

        UpdateInfo info{critic_loss, 0.0, 0.0, false};
        if (++update_count_ % kPolicyDelay == 0) {
            MlpGrads ga, scratch;
            ga.init_like(actor_);
            double actor_loss = 0.0;
            for (const Transition* tr : batch_items) {
                const Vec s = detail::to_vec(tr->obs);
                MlpCache actor_cache;
                const Vec out = mlp_forward(actor_, s, &actor_cache);
                Vec a(kActDim);
                for (int i = 0; i < kActDim; ++i) a[i] = std::tanh(out[i]);
                Vec sa(kObsDim + kActDim);
                sa << s, a;
                MlpCache c1;
                const double q1 = mlp_forward(q1_, sa, &c1)[0];
                actor_loss += -q1 * inv_b;
                scratch.init_like(q1_);
                Vec dy(1);
                dy[0] = 1.0;
                const Vec dsa = mlp_backward(q1_, c1, dy, scratch);
                Vec dout(kActDim);
                for (int i = 0; i < kActDim; ++i)
                    dout[i] = -dsa[kObsDim + i] * (1.0 - a[i] * a[i]) * inv_b;
                mlp_backward(actor_, actor_cache, dout, ga);
            }
            detail::check_finite(actor_loss, "actor loss");
            opt_actor_.step(actor_, ga);
            soft_update(actor_t_, actor_, cfg_.tau);
            soft_update(q1t_, q1_, cfg_.tau);
            soft_update(q2t_, q2_, cfg_.tau);
            info.actor_loss = actor_loss;
            info.actor_updated = true;
        }
        return info;
    }

    const Mlp& actor() const { return actor_; }
    Mlp& actor() { return actor_; }
    const Mlp& critic1() const { return q1_; }
    const Mlp& critic1_target() const { return q1t_; }

    double critic_value(const Vec& obs, const Vec& act) const {
        Vec sa(kObsDim + kActDim);
        sa << obs, act;
        return mlp_forward(q1_, sa)[0];
    }

  private:
    Scenario::Train cfg_;
    Rng rng_;
    Mlp actor_, q1_, q2_, actor_t_, q1t_, q2t_;
    Adam opt_actor_, opt_q1_, opt_q2_;
    long long update_count_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints. Binary actor weights plus a JSON sidecar describing the run.

class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct CheckpointMeta {
    std::string algorithm = "sac";
    std::uint64_t seed = 0;
    long long step_count = 0;
    int obs_dim = kObsDim;
    int act_dim = kActDim;
};

inline constexpr char kCheckpointMagic[4] = {'S', 'F', 'S', '1'};

inline void save_checkpoint(const std::string& path, const Mlp& actor,
                            const CheckpointMeta& meta) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint layout assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kCheckpointMagic, 4);
    const auto dims = actor.dims();
    const std::uint32_t layer_count = static_cast<std::uint32_t>(actor.layers.size());
    out.write(reinterpret_cast<const char*>(&layer_count), 4);
    for (int d : dims) {
        const std::uint32_t u = static_cast<std::uint32_t>(d);
        out.write(reinterpret_cast<const char*>(&u), 4);
    }
    for (const auto& l : actor.layers) {
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) {
                const double v = l.W(r, c);
                out.write(reinterpret_cast<const char*>(&v), 8);
            }
        for (Eigen::Index r = 0; r < l.b.size(); ++r) {
            const double v = l.b(r);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
    if (!out) throw std::runtime_error("short write: " + path);
    out.close();

    nlohmann::json j;
    j["algorithm"] = meta.algorithm;
    j["seed"] = meta.seed;
    j["step_count"] = meta.step_count;
    j["obs_dim"] = meta.obs_dim;
    j["act_dim"] = meta.act_dim;
    write_file(path + ".json", j.dump(2) + "\n");
}

inline Mlp load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != std::string_view(kCheckpointMagic, 4))
        throw CheckpointError("checkpoint version mismatch: expected SFS1, got '" +
                              std::string(magic, in.gcount() > 0
                                                     ? static_cast<std::size_t>(in.gcount())
                                                     : 0) +
                              "'");
    std::uint32_t layer_count = 0;
    in.read(reinterpret_cast<char*>(&layer_count), 4);
    if (!in || layer_count == 0 || layer_count > 64)
        throw CheckpointError("checkpoint header corrupt");
    std::vector<std::uint32_t> dims(layer_count + 1);
    in.read(reinterpret_cast<char*>(dims.data()), 4 * static_cast<std::streamsize>(dims.size()));
    if (!in) throw CheckpointError("checkpoint header corrupt");

    Mlp net;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        Layer l;
        l.W = Mat(dims[i + 1], dims[i]);
        l.b = Vec(dims[i + 1]);
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c)
                in.read(reinterpret_cast<char*>(&l.W(r, c)), 8);
        for (Eigen::Index r = 0; r < l.b.size(); ++r)
            in.read(reinterpret_cast<char*>(&l.b(r)), 8);
        net.layers.push_back(std::move(l));
    }
    if (!in) throw CheckpointError("checkpoint payload truncated");

    if (meta) {
        std::ifstream side(path + ".json");
        if (side) {
            nlohmann::json j = nlohmann::json::parse(side, nullptr, false);
            if (!j.is_discarded()) {
                meta->algorithm = j.value("algorithm", meta->algorithm);
                meta->seed = j.value("seed", meta->seed);
                meta->step_count = j.value("step_count", meta->step_count);
                meta->obs_dim = j.value("obs_dim", meta->obs_dim);
                meta->act_dim = j.value("act_dim", meta->act_dim);
            }
        }
    }
    return net;
}

// Greedy policy closure over a bare actor network, matching the algorithm's
// deterministic head (both algorithms squash with tanh; SAC's actor carries
// the spread in the second half of the output, which greedy play ignores).
inline std::function<Vec(const Vec&)> greedy_policy(const Mlp& actor) {
    const bool gaussian_head = actor.output_dim() == 2 * kActDim;
    if (!gaussian_head && actor.output_dim() != kActDim)
        throw std::invalid_argument("actor head size");
    return [&actor](const Vec& obs) {
        const Vec out = mlp_forward(actor, obs);
        Vec a(kActDim);
        for (int i = 0; i < kActDim; ++i) a[i] = std::tanh(out[i]);
        return a;
    };
}

// ---------------------------------------------------------------------------
// Evaluation and training.

struct EvalStats {
    double avg_return = 0.0;
    double success_rate = 0.0;
    double mean_skills = 0.0;  // macro actions per episode
};

template <class Policy>
EvalStats evaluate_policy(const Scenario& sc, Policy&& policy, int rollouts,
                          std::uint64_t seed) {
    SkillEnv env(sc, seed);
    EvalStats st;
    for (int r = 0; r < rollouts; ++r) {
        Vec obs = env.reset();
        double ret = 0.0;
        bool success = false;
        while (!env.done()) {
            const Vec a = policy(obs);
            const auto out = env.step(to_action(a));
            ret += out.reward;
            success = out.success;
            obs = out.obs;
        }
        st.avg_return += ret;
        st.success_rate += success ? 1.0 : 0.0;
        st.mean_skills += env.macros_used();
    }
    if (rollouts > 0) {
        st.avg_return /= rollouts;
        st.success_rate /= rollouts;
        st.mean_skills /= rollouts;
    }
    return st;
}

struct EvalPoint {
    long long step = 0;
    double avg_return = 0.0;
    double success_rate = 0.0;
    double mean_skills = 0.0;
};

struct TrainResult {
    std::vector<EvalPoint> curve;
    // The returned policy is the evaluation-selected snapshot: the weights
    // from the eval point with the best success rate (ties keep the latest,
    // return breaks exact ties). Off-policy runs oscillate, so "whatever the
    // last gradient step left behind" is a worse artifact than the best
    // validated state; the curve still records every point, dips included.
    Mlp actor;
    CheckpointMeta meta;
    bool diverged = false;
    std::string divergence_note;
    long long episodes = 0;
};

inline CsvTable curve_table(const std::vector<EvalPoint>& curve) {
    CsvTable t;
    t.columns = {"step", "avg_return", "success_rate", "mean_skills"};
    for (const auto& p : curve)
        t.rows.push_back({static_cast<double>(p.step), p.avg_return, p.success_rate,
                          p.mean_skills});
    return t;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

template <class Agent>
TrainResult train_impl(const Scenario& sc, std::uint64_t seed) {
    const auto& cfg = sc.train;
    SkillEnv env(sc, detail::mix_seed(seed, 0));
    Agent agent(cfg, detail::mix_seed(seed, 1));
    Rng sample_rng(detail::mix_seed(seed, 2));
    Rng warmup_rng(detail::mix_seed(seed, 3));
    ReplayBuffer buf(static_cast<std::size_t>(cfg.buffer_capacity));

    TrainResult res;
    res.meta.algorithm = cfg.algorithm == Algorithm::sac ? "sac" : "td3";
    res.meta.seed = seed;
    res.actor = agent.actor();  // healthy snapshot, refreshed at every eval

    double best_score = -1e300;
    Vec obs = cfg.steps > 0 ? env.reset() : Vec();
    for (long long step = 1; step <= cfg.steps; ++step) {
        Vec a(kActDim);
        if (step <= cfg.warmup) {
            for (int i = 0; i < kActDim; ++i) a[i] = warmup_rng.uniform(-1.0, 1.0);
        } else {
            a = agent.act_explore(obs);
        }
        const auto out = env.step(to_action(a));
        Transition tr;
        tr.obs = detail::to_obs_array(obs);
        tr.act = detail::to_act_array(a);
        tr.reward = out.reward;
        tr.next_obs = detail::to_obs_array(out.obs);
        tr.terminal = out.done && !out.truncated;
        buf.push(tr);
        obs = out.obs;
        if (out.done) {
            ++res.episodes;
            obs = env.reset();
        }

        if (step > cfg.warmup) {
            try {
                agent.update(buf, sample_rng);
            } catch (const std::runtime_error& e) {
                res.diverged = true;
                res.divergence_note = e.what();
                res.meta.step_count = step;
                return res;  // res.actor still holds the last healthy weights
            }
        }

        if (cfg.eval_period > 0 && step % cfg.eval_period == 0) {
            const auto st = evaluate_policy(
                sc, [&agent](const Vec& o) { return agent.act_greedy(o); },
                cfg.eval_rollouts, detail::mix_seed(seed, 100 + step / cfg.eval_period));
            res.curve.push_back({step, st.avg_return, st.success_rate, st.mean_skills});
            const double score = st.success_rate * 1e4 + st.avg_return;
            if (score >= best_score) {
                best_score = score;
                res.actor = agent.actor();
                res.meta.step_count = step;
            }
        }
    }
    if (res.curve.empty() && !res.diverged) {
        // no evaluation happened: the final weights are all there is
        res.actor = agent.actor();
        res.meta.step_count = cfg.steps;
    }
    return res;
}

}  // namespace detail

inline TrainResult train(const Scenario& sc, std::uint64_t seed) {
    return sc.train.algorithm == Algorithm::sac
               ? detail::train_impl<SacAgent>(sc, seed)
               : detail::train_impl<Td3Agent>(sc, seed);
}

// ---------------------------------------------------------------------------
// Robustness grid: rail yaw sweep crossed with mount positions along the
// rail run. Lateral offset stays randomized per rollout so each cell reports
// robustness around its nominal geometry, not one lucky alignment.

struct GridSpec {
    std::vector<double> yaws;    // rad
    std::vector<double> mounts;  // m along the rail
    int rollouts = 100;

    static GridSpec standard() {
        GridSpec g;
        for (int i = -4; i <= 4; ++i) g.yaws.push_back(deg2rad(2.0 * i));
        for (int i = -2; i <= 2; ++i) g.mounts.push_back(30e-3 * i);
        return g;
    }
};

struct GridResult {
    GridSpec spec;
    std::vector<double> success;      // row-major [mount][yaw]
    std::vector<double> mean_skills;  // same layout

    double cell_success(std::size_t mount_idx, std::size_t yaw_idx) const {
        return success[mount_idx * spec.yaws.size() + yaw_idx];
    }
};

template <class Policy>
GridResult evaluate_grid(const Scenario& sc, Policy&& policy, const GridSpec& spec,
                         std::uint64_t seed) {
    GridResult res;
    res.spec = spec;
    for (std::size_t mi = 0; mi < spec.mounts.size(); ++mi) {
        for (std::size_t yi = 0; yi < spec.yaws.size(); ++yi) {
            SkillEnv env(sc, detail::mix_seed(seed, mi * 1000 + yi));
            Rng dx_rng(detail::mix_seed(seed, 7777 + mi * 1000 + yi));
            double wins = 0.0, skills = 0.0;
            for (int r = 0; r < spec.rollouts; ++r) {
                RailConfig rail;
                rail.offset = dx_rng.uniform(-sc.randomization.offset_range,
                                             sc.randomization.offset_range);
                rail.yaw = spec.yaws[yi];
                rail.mount = spec.mounts[mi];
                Vec obs = env.reset(rail);
                bool success = false;
                while (!env.done()) {
                    const auto out = env.step(to_action(policy(obs)));
                    success = out.success;
                    obs = out.obs;
                }
                wins += success ? 1.0 : 0.0;
                skills += env.macros_used();
            }
            res.success.push_back(spec.rollouts > 0 ? wins / spec.rollouts : 0.0);
            res.mean_skills.push_back(spec.rollouts > 0 ? skills / spec.rollouts : 0.0);
        }
    }
    return res;
}

inline CsvTable grid_table(const GridResult& g) {
    CsvTable t;
    t.columns = {"yaw_deg", "mount_mm", "success_rate", "mean_skills", "rollouts"};
    for (std::size_t mi = 0; mi < g.spec.mounts.size(); ++mi)
        for (std::size_t yi = 0; yi < g.spec.yaws.size(); ++yi)
            t.rows.push_back({rad2deg(g.spec.yaws[yi]), g.spec.mounts[mi] * 1e3,
                              g.success[mi * g.spec.yaws.size() + yi],
                              g.mean_skills[mi * g.spec.yaws.size() + yi],
                              static_cast<double>(g.spec.rollouts)});
    return t;
}

// Grey means reliable: each pixel is the cell success rate, mounts as rows,
// yaws as columns.
inline std::string grid_pgm(const GridResult& g) {
    return to_pgm(g.spec.yaws.size(), g.spec.mounts.size(), g.success);
}

}  // namespace snapfit
