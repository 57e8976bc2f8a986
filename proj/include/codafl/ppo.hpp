#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "scheduler.hpp"

namespace codafl {

struct PpoHyperparams {
  int episodes = 500;           // total episode budget, greedy warm start included
  int episodes_per_batch = 10;
  int epochs = 4;
  int hidden = 64;
  double clip = 0.2;
  double discount = 0.99;
  double learning_rate = 3e-3;
  double entropy_coef = 0.01;
  double value_coef = 0.5;

  void validate() const {
    require(episodes >= 1 && episodes_per_batch >= 1 && epochs >= 1 && hidden >= 1, ErrorCode::InvalidParameter,
            "ppo counts must be positive");
    require(clip > 0.0 && discount > 0.0 && discount <= 1.0 && learning_rate > 0.0 && entropy_coef >= 0.0 &&
                value_coef >= 0.0,
            ErrorCode::InvalidParameter, "invalid ppo coefficients");
  }
};

// Flat parameter vector for the policy and value networks.
struct PolicyParams {
  std::vector<double> values;
};

// Two tanh MLPs over the state encoding: one producing action logits, one a
// scalar value. Action index v * N + i assigns task v to cluster i; index
// V * N is Wait.
class PolicyNetwork {
 public:
  PolicyNetwork(std::size_t tasks, std::size_t clusters, std::size_t hidden)
      : tasks_(tasks), clusters_(clusters), hidden_(hidden) {
    inputs_ = tasks * 4 + clusters + tasks * clusters;
    actions_ = tasks * clusters + 1;
    // policy: W1 b1 W2 b2, value: W1 b1 w2 b2
    pw1_ = 0;
    pb1_ = pw1_ + hidden_ * inputs_;
    pw2_ = pb1_ + hidden_;
    pb2_ = pw2_ + actions_ * hidden_;
    vw1_ = pb2_ + actions_;
    vb1_ = vw1_ + hidden_ * inputs_;
    vw2_ = vb1_ + hidden_;
    vb2_ = vw2_ + hidden_;
    size_ = vb2_ + 1;
  }

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t parameter_count() const noexcept { return size_; }
  std::size_t wait_index() const noexcept { return tasks_ * clusters_; }

  PolicyParams initial_params(Rng& rng) const {
    PolicyParams p;
    p.values.assign(size_, 0.0);
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(inputs_));
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (std::size_t k = 0; k < hidden_ * inputs_; ++k) p.values[pw1_ + k] = rng.normal() * in_scale;
    // Small output layer: the initial policy is close to uniform over valid actions.
    for (std::size_t k = 0; k < actions_ * hidden_; ++k) p.values[pw2_ + k] = rng.normal() * hid_scale * 0.01;
    for (std::size_t k = 0; k < hidden_ * inputs_; ++k) p.values[vw1_ + k] = rng.normal() * in_scale;
    for (std::size_t k = 0; k < hidden_; ++k) p.values[vw2_ + k] = rng.normal() * hid_scale;
    return p;
  }

  std::vector<double> encode(const ScheduleState& s, const ProcTimeMatrix& m, double scale) const {
    std::vector<double> x(inputs_, 0.0);
    for (std::size_t v = 0; v < tasks_; ++v) x[v * 4 + static_cast<std::size_t>(s.status[v])] = 1.0;
    const std::size_t busy = tasks_ * 4;
    for (std::size_t i = 0; i < clusters_; ++i)
      if (!s.cluster_idle(i)) x[busy + i] = (s.cluster_busy_until[i] - s.clock) / scale;
    const std::size_t rows = busy + clusters_;
    for (std::size_t v = 0; v < tasks_; ++v) {
      if (s.status[v] != TaskStatus::Ready) continue;
      for (std::size_t i = 0; i < clusters_; ++i)
        if (m.feasible(v, i)) x[rows + v * clusters_ + i] = m.seconds(v, i) / scale;
    }
    return x;
  }

  std::vector<std::size_t> mask(const ScheduleState& s, const ProcTimeMatrix& m) const {
    std::vector<std::size_t> out;
    for (const auto& a : valid_actions(s, m)) out.push_back(to_index(a));
    return out;
  }

  std::size_t to_index(const Action& a) const {
    return a.kind == Action::Kind::Wait ? wait_index() : a.task * clusters_ + a.cluster;
  }

  Action to_action(std::size_t index) const {
    if (index == wait_index()) return Action::wait();
    return Action::assign(index / clusters_, index % clusters_);
  }

  struct Forward {
    std::vector<double> hidden;        // policy hidden activations
    std::vector<double> probs;         // over the valid set, aligned with the mask
    std::vector<double> value_hidden;
    double value = 0.0;
  };

  Forward forward(const PolicyParams& p, std::span<const double> x, std::span<const std::size_t> valid) const {
    const auto& w = p.values;
    Forward f;
    f.hidden = layer(w, pw1_, pb1_, x);
    std::vector<double> logits(valid.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < valid.size(); ++k) {
      const std::size_t a = valid[k];
      double z = w[pb2_ + a];
      for (std::size_t h = 0; h < hidden_; ++h) z += w[pw2_ + a * hidden_ + h] * f.hidden[h];
      logits[k] = z;
      peak = std::max(peak, z);
    }
    f.probs.resize(valid.size());
    double total = 0.0;
    for (std::size_t k = 0; k < valid.size(); ++k) {
      f.probs[k] = std::exp(logits[k] - peak);
      total += f.probs[k];
    }
    for (auto& pr : f.probs) pr /= total;
    f.value_hidden = layer(w, vw1_, vb1_, x);
    f.value = w[vb2_];
    for (std::size_t h = 0; h < hidden_; ++h) f.value += w[vw2_ + h] * f.value_hidden[h];
    return f;
  }

  // Backpropagates d(loss)/d(logit) over the valid actions and d(loss)/d(value)
  // into grad (accumulating).
  void backward(const PolicyParams& p, std::span<const double> x, std::span<const std::size_t> valid,
                const Forward& f, std::span<const double> dlogits, double dvalue, std::vector<double>& grad) const {
    const auto& w = p.values;
    std::vector<double> dh(hidden_, 0.0);
    for (std::size_t k = 0; k < valid.size(); ++k) {
      const std::size_t a = valid[k];
      const double g = dlogits[k];
      if (g == 0.0) continue;
      grad[pb2_ + a] += g;
      for (std::size_t h = 0; h < hidden_; ++h) {
        grad[pw2_ + a * hidden_ + h] += g * f.hidden[h];
        dh[h] += g * w[pw2_ + a * hidden_ + h];
      }
    }
    for (std::size_t h = 0; h < hidden_; ++h) {
      const double pre = dh[h] * (1.0 - f.hidden[h] * f.hidden[h]);
      if (pre == 0.0) continue;
      grad[pb1_ + h] += pre;
      for (std::size_t i = 0; i < inputs_; ++i) grad[pw1_ + h * inputs_ + i] += pre * x[i];
    }
    grad[vb2_] += dvalue;
    for (std::size_t h = 0; h < hidden_; ++h) {
      grad[vw2_ + h] += dvalue * f.value_hidden[h];
      const double pre = dvalue * w[vw2_ + h] * (1.0 - f.value_hidden[h] * f.value_hidden[h]);
      if (pre == 0.0) continue;
      grad[vb1_ + h] += pre;
      for (std::size_t i = 0; i < inputs_; ++i) grad[vw1_ + h * inputs_ + i] += pre * x[i];
    }
  }

 private:
  std::vector<double> layer(const std::vector<double>& w, std::size_t wo, std::size_t bo,
                            std::span<const double> x) const {
    std::vector<double> h(hidden_);
    for (std::size_t j = 0; j < hidden_; ++j) {
      double z = w[bo + j];
      const double* row = &w[wo + j * inputs_];
      for (std::size_t i = 0; i < inputs_; ++i) z += row[i] * x[i];
      h[j] = std::tanh(z);
    }
    return h;
  }

  std::size_t tasks_, clusters_, hidden_;
  std::size_t inputs_ = 0, actions_ = 0, size_ = 0;
  std::size_t pw1_ = 0, pb1_ = 0, pw2_ = 0, pb2_ = 0, vw1_ = 0, vb1_ = 0, vw2_ = 0, vb2_ = 0;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::size_t size, double lr) : lr_(lr), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_), c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = kBeta1 * m_[k] + (1.0 - kBeta1) * grad[k];
      v_[k] = kBeta2 * v_[k] + (1.0 - kBeta2) * grad[k] * grad[k];
      params[k] -= lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + 1e-8);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999;
  double lr_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

struct PpoResult {
  PolicyParams params;
  Schedule best;
  std::vector<double> episode_makespans;  // episode 0 is the greedy warm start
};

// Clipped-surrogate policy gradient over the scheduling environment.
//
// Each iteration samples a batch of episodes from the masked policy, scores
// every step with (discounted return-to-go - value estimate), normalizes
// those advantages over the batch and runs `epochs` full-batch Adam updates
// on the clipped objective plus value regression and an entropy bonus.
// Rewards are divided by the greedy makespan so the scale is instance-free.
// The best schedule seen in any episode (greedy included) is returned.
inline PpoResult ppo_train(const TaskGraph& g, const ProcTimeMatrix& m, const PpoHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  m.require_feasible();
  BestScheduleTracker tracker;
  PpoResult result;

  const Schedule warm = greedy_schedule(g, m);
  tracker.offer(warm);
  result.episode_makespans.push_back(warm.makespan);

  const PolicyNetwork net(g.size(), m.clusters(), static_cast<std::size_t>(hp.hidden));
  Rng rng(seed);
  result.params = net.initial_params(rng);
  if (g.size() == 0) {
    result.best = *tracker.best();
    return result;
  }
  AdamOptimizer adam(net.parameter_count(), hp.learning_rate);
  const double state_scale = std::max(m.max_finite(), ProcTimeMatrix::kTick);
  const double reward_scale = std::max(warm.makespan, ProcTimeMatrix::kTick);

  struct Step {
    std::vector<double> x;
    std::vector<std::size_t> valid;
    std::size_t chosen = 0;  // position within valid
    double logp_old = 0.0;
    double ret = 0.0;
    double advantage = 0.0;
  };

  int episodes_done = 1;
  while (episodes_done < hp.episodes) {
    std::vector<Step> batch;
    const int in_batch = std::min(hp.episodes_per_batch, hp.episodes - episodes_done);
    for (int e = 0; e < in_batch; ++e) {
      auto s = env_reset(g, m);
      std::vector<Step> episode;
      std::vector<double> rewards, values;
      while (!s.done()) {
        Step st;
        st.x = net.encode(s, m, state_scale);
        st.valid = net.mask(s, m);
        const auto f = net.forward(result.params, st.x, st.valid);
        st.chosen = rng.categorical(f.probs);
        st.logp_old = std::log(std::max(f.probs[st.chosen], 1e-300));
        auto step = env_step(s, net.to_action(st.valid[st.chosen]), m, g);
        rewards.push_back(step.reward / reward_scale);
        values.push_back(f.value);
        episode.push_back(std::move(st));
        s = std::move(step.state);
      }
      double running = 0.0;
      for (std::size_t t = episode.size(); t-- > 0;) {
        running = rewards[t] + hp.discount * running;
        episode[t].ret = running;
        episode[t].advantage = running - values[t];
      }
      const auto sched = schedule_from_state(s, g);
      tracker.offer(sched);
      result.episode_makespans.push_back(sched.makespan);
      for (auto& st : episode) batch.push_back(std::move(st));
    }
    episodes_done += in_batch;

    double mean = 0.0, var = 0.0;
    for (const auto& st : batch) mean += st.advantage;
    mean /= static_cast<double>(batch.size());
    for (const auto& st : batch) var += (st.advantage - mean) * (st.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(batch.size())) + 1e-8;
    for (auto& st : batch) st.advantage = (st.advantage - mean) / sd;

    std::vector<double> grad(net.parameter_count());
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const auto& st : batch) {
        const auto f = net.forward(result.params, st.x, st.valid);
        const double logp = std::log(std::max(f.probs[st.chosen], 1e-300));
        const double ratio = std::exp(logp - st.logp_old);
        const double a = st.advantage;
        const bool clipped = (a >= 0.0 && ratio > 1.0 + hp.clip) || (a < 0.0 && ratio < 1.0 - hp.clip);
        // loss = -min(ratio A, clip(ratio) A) - c_H H + c_V (V - G)^2
        const double dlogp = clipped ? 0.0 : -a * ratio;
        double entropy = 0.0;
        for (double p : f.probs)
          if (p > 0.0) entropy -= p * std::log(p);
        std::vector<double> dlogits(st.valid.size());
        for (std::size_t k = 0; k < st.valid.size(); ++k) {
          const double p = f.probs[k];
          const double onehot = k == st.chosen ? 1.0 : 0.0;
          dlogits[k] = dlogp * (onehot - p);
          if (p > 0.0) dlogits[k] += hp.entropy_coef * p * (std::log(p) + entropy);
        }
        const double dvalue = 2.0 * hp.value_coef * (f.value - st.ret);
        net.backward(result.params, st.x, st.valid, f, dlogits, dvalue, grad);
      }
      for (auto& gk : grad) gk /= static_cast<double>(batch.size());
      adam.step(result.params.values, grad);
    }
  }
  result.best = *tracker.best();
  return result;
}

}  // namespace codafl
