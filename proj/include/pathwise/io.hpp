#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

#include "pathwise/errors.hpp"
#include "pathwise/house.hpp"
#include "pathwise/mdp.hpp"
#include "pathwise/pomdp.hpp"

namespace pathwise {

inline constexpr const char* kInstanceSchema = "pathwise-instance/1";

enum class InstanceKind { house, mdp, pomdp };
const char* to_string(InstanceKind kind);

struct InstanceMetadata {
  std::string name;
  std::string description;
  std::string version = kInstanceSchema;
};

struct Instance {
  InstanceMetadata metadata;
  std::variant<GamblingHouse, FiniteMDP, FinitePOMDP> body;

  InstanceKind kind() const { return static_cast<InstanceKind>(body.index()); }
  const GamblingHouse* house() const { return std::get_if<GamblingHouse>(&body); }
  const FiniteMDP* mdp() const { return std::get_if<FiniteMDP>(&body); }
  const FinitePOMDP* pomdp() const { return std::get_if<FinitePOMDP>(&body); }
};

/// Validation failure at a JSON location such as $.body.menus[0][1].
class SchemaError : public InvalidInput {
 public:
  SchemaError(std::string path, const std::string& message)
      : InvalidInput(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct LoadOptions {
  /// Reject MDPs whose transitions fail the KR 1-Lipschitz check.
  bool require_mdp_lipschitz = true;
};

/// Accepts the versioned envelope {schema, kind, metadata, body} and, for
/// houses, a bare body object. Weight rows may be off by 1e-9 and are
/// renormalized; anything further is a normalization error at that row.
Instance parse_instance(const nlohmann::json& doc, const LoadOptions& options = {});
Instance load_instance(const std::string& path, const LoadOptions& options = {});

/// Canonical envelope: dense distance matrices and dense weight rows.
nlohmann::json instance_to_json(const Instance& instance);
void save_instance(const Instance& instance, const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
/// Hash of the canonical serialization.
std::string instance_hash(const Instance& instance);

/// State by label, or by decimal index when no label matches.
std::size_t resolve_label(const std::vector<std::string>& labels, const std::string& key, const std::string& what);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace pathwise
