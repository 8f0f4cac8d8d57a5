#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace georay {

struct ConfigKey {
    const char* key;
    const char* default_value;
    const char* doc;
};

// The documented schema, in serialization order.
const std::vector<ConfigKey>& config_schema();

// Flat "key = value" configuration. Unknown keys, duplicates and malformed
// lines are rejected; missing keys take schema defaults.
class RunConfig {
public:
    RunConfig();  // all defaults

    static RunConfig parse(const std::string& text, const std::string& origin = "<string>");
    static RunConfig load(const std::string& path);
    std::string serialize() const;

    // GEORAY_OVERRIDE_<KEY> with dots as underscores, upper case; returns the
    // keys that were overridden.
    std::vector<std::string> apply_env_overrides();
    void set(const std::string& key, const std::string& value);

    const std::string& raw(const std::string& key) const;
    std::string str(const std::string& key) const { return raw(key); }
    double real(const std::string& key) const;
    int integer(const std::string& key) const;
    bool boolean(const std::string& key) const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<int> integers(const std::string& key) const;

    bool operator==(const RunConfig& o) const { return values_ == o.values_; }

private:
    std::map<std::string, std::string> values_;
};

std::string env_override_name(const std::string& key);

}  // namespace georay
