#include "uqstream/stage_buffer.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace uqstream {

SimulationBlock make_simulation_block(const InputModel& model, Eigen::ArrayXd thetas,
                                      Eigen::ArrayXXd inputs, Eigen::ArrayXXd outputs) {
  if (inputs.rows() != thetas.size() || outputs.rows() != inputs.rows() ||
      outputs.cols() != inputs.cols()) {
    throw InputError("simulation block arrays must share an M x N shape");
  }
  if (!outputs.allFinite()) throw InputError("simulation outputs must be finite");

  SimulationBlock block;
  block.log_proposal.resize(inputs.rows(), inputs.cols());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    block.log_proposal.row(i) = log_pdf(model, inputs.row(i).transpose(), thetas[i]).transpose();
  }
  block.thetas = std::move(thetas);
  block.inputs = std::move(inputs);
  block.outputs = std::move(outputs);
  return block;
}

bool denominators_consistent(const InputModel& model, const SimulationBlock& block) {
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    const Eigen::ArrayXd again = log_pdf(model, block.inputs.row(i).transpose(), block.thetas[i]);
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      if (again[j] != block.log_proposal(i, j)) return false;
    }
  }
  return true;
}

void validate_record(const StageRecord& record, const InputModel& model) {
  if (record.estimates.size() != 0 && record.estimates.size() != record.thetas.size()) {
    throw InputError("estimates must align with theta samples");
  }
  if (!record.has_simulation()) return;
  const SimulationBlock& b = *record.simulation;
  if (b.outputs.rows() != b.inputs.rows() || b.outputs.cols() != b.inputs.cols() ||
      b.log_proposal.rows() != b.inputs.rows() || b.log_proposal.cols() != b.inputs.cols() ||
      b.thetas.size() != b.inputs.rows()) {
    throw InputError("simulation block arrays must share an M x N shape");
  }
  if (!b.outputs.allFinite()) throw InputError("simulation outputs must be finite");
  if (!denominators_consistent(model, b)) throw InputError("cached denominators are stale");
}

StageBuffer::StageBuffer(std::size_t capacity, std::size_t first_stage)
    : capacity_(capacity), next_stage_(first_stage) {
  if (capacity == 0) throw UsageError("stage buffer capacity must be at least 1");
}

void StageBuffer::push(StageRecord record) {
  if (record.stage != next_stage_) {
    throw UsageError("out-of-order stage: expected " + std::to_string(next_stage_) + ", got " +
                     std::to_string(record.stage));
  }
  records_.push_back(std::move(record));
  if (records_.size() > capacity_) records_.pop_front();
  ++next_stage_;
  ++pushed_;
}

const StageRecord& StageBuffer::newest() const {
  if (records_.empty()) throw UsageError("stage buffer is empty");
  return records_.back();
}

StageBuffer push_stage(StageBuffer buffer, StageRecord record) {
  buffer.push(std::move(record));
  return buffer;
}

// ---------------------------------------------------------------------------
// Snapshot

namespace {

using nlohmann::json;

json to_json(const Eigen::ArrayXd& a) { return std::vector<double>(a.begin(), a.end()); }

json to_json(const Eigen::ArrayXXd& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    rows.push_back(std::vector<double>(a.row(i).begin(), a.row(i).end()));
  }
  return rows;
}

Eigen::ArrayXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::ArrayXXd matrix_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = m == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::ArrayXXd out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) throw InputError("ragged matrix");
    for (Eigen::Index k = 0; k < n; ++k) out(i, k) = rows[i][k];
  }
  return out;
}

json posterior_to_json(const ConjugatePosterior& p) {
  const bool gamma = p.family() == PosteriorFamily::kGamma;
  return {{"family", gamma ? "gamma" : "normal"},
          {"first", gamma ? p.shape() : p.mean()},
          {"second", gamma ? p.rate() : p.variance()},
          {"obs_sigma", p.obs_sigma()},
          {"count", p.count()},
          {"sufficient_sum", p.sufficient_sum()}};
}

ConjugatePosterior posterior_from_json(const json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family != "gamma" && family != "normal") throw InputError("unknown posterior family");
  return ConjugatePosterior::restore(
      family == "gamma" ? PosteriorFamily::kGamma : PosteriorFamily::kNormal,
      j.at("first").get<double>(), j.at("second").get<double>(), j.at("obs_sigma").get<double>(),
      j.at("count").get<std::size_t>(), j.at("sufficient_sum").get<double>());
}

}  // namespace

void save_snapshot(const StageBuffer& buffer, std::ostream& out) {
  json records = json::array();
  for (const StageRecord& r : buffer.stages()) {
    json jr = {{"stage", r.stage},
               {"thetas", to_json(r.thetas)},
               {"estimates", to_json(r.estimates)},
               {"posterior", posterior_to_json(r.posterior)}};
    if (r.has_simulation()) {
      jr["simulation"] = {{"thetas", to_json(r.simulation->thetas)},
                          {"inputs", to_json(r.simulation->inputs)},
                          {"outputs", to_json(r.simulation->outputs)},
                          {"log_proposal", to_json(r.simulation->log_proposal)}};
    }
    records.push_back(std::move(jr));
  }
  const std::size_t first = buffer.empty() ? buffer.next_stage() : buffer.stages().front().stage;
  json doc = {{"format", kSnapshotFormat},
              {"version", kSnapshotVersion},
              {"capacity", buffer.capacity()},
              {"first_stage", first},
              {"records", std::move(records)}};
  out << doc.dump() << '\n';
}

StageBuffer load_snapshot(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(std::string("snapshot parse error: ") + e.what());
  }
  if (doc.value("format", "") != kSnapshotFormat) throw InputError("not a stage buffer snapshot");
  if (doc.value("version", 0) != kSnapshotVersion) throw InputError("unsupported snapshot version");

  try {
    StageBuffer buffer(doc.at("capacity").get<std::size_t>(),
                       doc.at("first_stage").get<std::size_t>());
    for (const json& jr : doc.at("records")) {
      StageRecord r;
      r.stage = jr.at("stage").get<std::size_t>();
      r.thetas = vector_from_json(jr.at("thetas"));
      r.estimates = vector_from_json(jr.at("estimates"));
      r.posterior = posterior_from_json(jr.at("posterior"));
      if (jr.contains("simulation")) {
        const json& js = jr.at("simulation");
        auto block = std::make_shared<SimulationBlock>();
        block->thetas = vector_from_json(js.at("thetas"));
        block->inputs = matrix_from_json(js.at("inputs"));
        block->outputs = matrix_from_json(js.at("outputs"));
        block->log_proposal = matrix_from_json(js.at("log_proposal"));
        r.simulation = std::move(block);
      }
      buffer.push(std::move(r));
    }
    return buffer;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace uqstream
