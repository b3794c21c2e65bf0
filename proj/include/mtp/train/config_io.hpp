#pragma once

#include <json.hpp>

#include "mtp/model/model.hpp"
#include "mtp/train/train.hpp"

namespace mtp::train {

/// JSON forms of the configs. Readers reject unknown keys and wrong types,
/// naming the offending key; missing keys keep their defaults.
nlohmann::json model_config_to_json(const ModelConfig &config);
ModelConfig model_config_from_json(const nlohmann::json &doc, const std::string &where = "model");
nlohmann::json train_config_to_json(const TrainConfig &config);
TrainConfig train_config_from_json(const nlohmann::json &doc, const std::string &where = "train");

class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Throws ConfigError if `doc` is not an object or has keys outside `allowed`.
void require_keys(const nlohmann::json &doc, std::initializer_list<const char *> allowed, const std::string &where);

/// Copies doc[key] into out when present, checking its JSON type against T.
template <typename T>
void read_field(const nlohmann::json &doc, const char *key, T &out, const std::string &where) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    auto fail = [&](const char *expected) { throw ConfigError(where + "." + key + ": expected " + expected); };
    if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) fail("true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) fail("a string");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) fail("a number");
    } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<std::int64_t>() >= 0)) {
            fail("a non-negative integer");
        }
    } else {
        if (!it->is_number_integer()) fail("an integer");
    }
    out = it->template get<T>();
}

}  // namespace mtp::train
