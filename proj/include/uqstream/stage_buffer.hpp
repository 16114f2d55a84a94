#ifndef UQSTREAM_STAGE_BUFFER_HPP
#define UQSTREAM_STAGE_BUFFER_HPP

#include <Eigen/Core>

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>

#include "uqstream/efd.hpp"

namespace uqstream {

/// M×N simulation block: inputs ξ^{i,j}, outputs h(ξ^{i,j}) and the cached
/// proposal log-densities log p(ξ^{i,j} | θ^i). Row i belongs to θ^i.
struct SimulationBlock {
  Eigen::ArrayXd thetas;
  Eigen::ArrayXXd inputs;
  Eigen::ArrayXXd outputs;
  Eigen::ArrayXXd log_proposal;

  Eigen::Index rows() const { return inputs.rows(); }
  Eigen::Index cols() const { return inputs.cols(); }
};

/// Builds a block and fills the cached denominators. Throws InputError on
/// shape mismatch or non-finite outputs.
SimulationBlock make_simulation_block(const InputModel& model, Eigen::ArrayXd thetas,
                                      Eigen::ArrayXXd inputs, Eigen::ArrayXXd outputs);

/// Recomputes the cached denominators and compares bit-for-bit.
bool denominators_consistent(const InputModel& model, const SimulationBlock& block);

/// One time stage: θ-samples drawn from the posterior at that stage, the
/// posterior snapshot, the performance estimates attached to each θ-sample
/// and, when simulations were run at this stage, the simulation block.
struct StageRecord {
  std::size_t stage = 0;
  Eigen::ArrayXd thetas;
  ConjugatePosterior posterior = ConjugatePosterior::gamma(1.0, 1.0);
  Eigen::ArrayXd estimates;
  std::shared_ptr<const SimulationBlock> simulation;

  bool has_simulation() const { return simulation != nullptr; }
};

/// Checks the StageRecord invariants (shapes, finite outputs, cached
/// denominators). Throws InputError describing the first violation.
void validate_record(const StageRecord& record, const InputModel& model);

/// Ring of the most recent K stage records, oldest first.
class StageBuffer {
 public:
  /// `first_stage` is the index the first pushed record must carry.
  explicit StageBuffer(std::size_t capacity, std::size_t first_stage = 0);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Appends a record whose stage index is newest + 1 (first_stage for an
  /// empty buffer), evicting the oldest once the capacity is exceeded.
  void push(StageRecord record);

  const std::deque<StageRecord>& stages() const { return records_; }
  const StageRecord& newest() const;

  /// Number of records pushed over the buffer's lifetime.
  std::size_t pushed() const { return pushed_; }

  /// Stage index expected by the next push.
  std::size_t next_stage() const { return next_stage_; }

 private:
  std::size_t capacity_;
  std::size_t next_stage_;
  std::size_t pushed_ = 0;
  std::deque<StageRecord> records_;
};

/// Functional form of StageBuffer::push.
StageBuffer push_stage(StageBuffer buffer, StageRecord record);

/// JSON snapshot with a versioned, self-describing header.
void save_snapshot(const StageBuffer& buffer, std::ostream& out);
StageBuffer load_snapshot(std::istream& in);

inline constexpr const char* kSnapshotFormat = "uqstream.stage_buffer";
inline constexpr int kSnapshotVersion = 1;

}  // namespace uqstream

#endif  // UQSTREAM_STAGE_BUFFER_HPP
