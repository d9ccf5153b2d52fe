#include "gigpo/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "gigpo/config.hpp"

namespace gigpo {

namespace {

using nlohmann::json;

std::string doubles_to_hex(const std::vector<double>& values) {
    std::string bytes;
    bytes.reserve(values.size() * 8);
    for (double d : values) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
    return to_hex(bytes);
}

std::vector<double> doubles_from_hex(const std::string& hex) {
    const std::string bytes = from_hex(hex);
    if (bytes.size() % 8 != 0) throw std::runtime_error("checkpoint: malformed double array");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b)
            u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
        out[i] = std::bit_cast<double>(u);
    }
    return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["kind"] = "checkpoint";
    j["config"] = dump_train_config(ckpt.config);
    j["iteration"] = ckpt.iteration;
    j["final"] = ckpt.final;

    json pol;
    pol["action_count"] = ckpt.params.config().action_count;
    pol["flat"] = doubles_to_hex(ckpt.params.flat());
    json keys = json::array();
    for (const auto& k : ckpt.params.table_keys()) keys.push_back(to_hex(k.bytes));
    pol["table_keys"] = keys;
    j["policy"] = pol;

    json opt;
    opt["m"] = doubles_to_hex(ckpt.opt_state.m);
    opt["v"] = doubles_to_hex(ckpt.opt_state.v);
    opt["step_count"] = ckpt.opt_state.step_count;
    j["optimizer"] = opt;

    j["rng"] = json{{"run_seed", ckpt.config.seed}, {"next_iteration", ckpt.iteration + 1}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("checkpoint: JSON parse error in '" + path + "': " + e.what());
    }
    if (!j.is_object() || j.value("kind", "") != "checkpoint")
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
    if (j.value("format_version", -1) != kCheckpointFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version in '" + path + "'");

    Checkpoint ckpt;
    ckpt.config = parse_train_config(j.at("config"));
    ckpt.iteration = j.at("iteration").get<int>();
    ckpt.final = j.value("final", false);

    PolicyConfig pc = ckpt.config.policy;
    pc.action_count = j.at("policy").at("action_count").get<int>();
    pc.init_seed = ckpt.config.seed;
    ckpt.params = PolicyParams::make(pc);

    {
        auto env = make_environment(ckpt.config.env);
        if (env->action_count() != pc.action_count)
            throw std::runtime_error("checkpoint: action space does not match environment");
    }

    for (const auto& k : j.at("policy").at("table_keys"))
        ckpt.params.materialize_row(StateKey(from_hex(k.get<std::string>())));
    auto flat = doubles_from_hex(j.at("policy").at("flat").get<std::string>());
    if (flat.size() != ckpt.params.flat().size())
        throw std::runtime_error("checkpoint: parameter vector size mismatch");
    ckpt.params.flat() = std::move(flat);

    ckpt.opt_state.m = doubles_from_hex(j.at("optimizer").at("m").get<std::string>());
    ckpt.opt_state.v = doubles_from_hex(j.at("optimizer").at("v").get<std::string>());
    ckpt.opt_state.step_count = j.at("optimizer").at("step_count").get<std::int64_t>();
    return ckpt;
}

}  // namespace gigpo
