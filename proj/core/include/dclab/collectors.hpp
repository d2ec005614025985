#pragma once

#include "dclab/collector.hpp"
#include "dclab/dp.hpp"
#include "dclab/hidict.hpp"
#include "dclab/unlearn.hpp"

#include <memory>

namespace dclab {

// Data-storage collector: entries keyed by (key, auth) where auth is a fresh
// λ-bit string drawn on every insert and returned to the client.
class HistIndCollector final : public Collector {
 public:
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

  const HiDict& dict() const { return dict_; }

 private:
  HiDict dict_;
};

// Negative control: drops the authentication check entirely; entries are
// keyed by the client-chosen key alone.
class NoAuthCollector final : public Collector {
 public:
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

 private:
  HiDict dict_;
};

// Negative control: HistInd semantics over an append-only log whose
// serialization retains deleted records.
class TombstoneCollector final : public Collector {
 public:
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

 private:
  TombstoneDict dict_;
};

// Outsourced-storage collector: keeps only ((key, auth) -> (exkey, exauth))
// bookkeeping locally and stores values with the environment over Φ.
class HistInd2Collector final : public Collector {
 public:
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

 private:
  HiDict dict_;
};

// Summarization collector: inserts under server-drawn keys and computes a
// differentially private summary of a random size-λ subset once the entry
// count first reaches a randomized threshold thr ∈ [λ+1, 2λ].
class DiffPCollector final : public Collector {
 public:
  explicit DiffPCollector(DpParams params) : params_(std::move(params)) {}

  void init(uint32_t lambda, Party self, DrawSource& draws) override;
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

  bool summarized() const { return summarized_; }
  int64_t threshold() const { return thr_; }

 private:
  DpParams params_;
  HiDict dict_;
  int64_t thr_ = 0;
  int64_t count_ = 0;
  bool summarized_ = false;
  std::optional<Summary> summary_;
};

// Learning collector: like DiffP but trains an exactly-unlearnable model at
// a randomized threshold thr ∈ [λ, 2λ] and stops inserting once trained.
class MlCollector final : public Collector {
 public:
  explicit MlCollector(size_t dimension) : d_(dimension) {}

  void init(uint32_t lambda, Party self, DrawSource& draws) override;
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

  bool learnt() const { return learnt_; }
  int64_t threshold() const { return thr_; }

 private:
  size_t d_;
  HiDict dict_;
  int64_t thr_ = 0;
  int64_t count_ = 0;
  bool learnt_ = false;
  std::optional<Model> model_;
};

// Two collectors running independently; sessions are routed by protocol id
// and the state is the concatenation of the sub-states.
class CompositeCollector final : public Collector {
 public:
  CompositeCollector(std::unique_ptr<Collector> left, std::unique_ptr<Collector> right);

  void init(uint32_t lambda, Party self, DrawSource& draws) override;
  std::unique_ptr<Collector> clone() const override;
  std::optional<Bytes> step(const std::string& protocol, const Bytes& request,
                            StepContext& ctx) override;
  Bytes serialize() const override;
  std::vector<ProtocolSpec> protocol_specs() const override;

 private:
  std::unique_ptr<Collector> left_;
  std::unique_ptr<Collector> right_;
};

inline std::unique_ptr<Collector> compose(std::unique_ptr<Collector> left,
                                          std::unique_ptr<Collector> right) {
  return std::make_unique<CompositeCollector>(std::move(left), std::move(right));
}

enum class ControlKind { NoAuth, Tombstone, ExactSummary };

// Collector identical to its honest counterpart except the named flaw.
std::unique_ptr<Collector> make_negative_control(ControlKind kind,
                                                 const DpParams& dp_params = DpParams{Rational(1, 2), 1});

}  // namespace dclab
