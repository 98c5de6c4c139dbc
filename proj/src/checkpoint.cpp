#include "ser/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ser {

namespace {

using nlohmann::json;

json tensor_to_json(const nn::Matrix& m)
{
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

nn::Matrix tensor_from_json(const json& j, const std::string& name)
{
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw CheckpointError("tensor " + name + ": data length does not match its shape");
    nn::Matrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    return m;
}

const char* activation_name(nn::Activation a) { return a == nn::Activation::Tanh ? "tanh" : "linear"; }

nn::Activation parse_activation(const std::string& s)
{
    if (s == "tanh") return nn::Activation::Tanh;
    if (s == "linear") return nn::Activation::Linear;
    throw CheckpointError("unknown activation '" + s + "'");
}

}  // namespace

std::string checkpoint_to_json(const nn::ModelParams& p)
{
    p.validate();
    json doc;
    doc["format_version"] = kCheckpointFormatVersion;
    doc["architecture"] = {
        {"input_dim", p.input_dim()},
        {"lstm_units", p.lstm_units()},
        {"dense_units", p.trunk.W.cols()},
        {"trunk_activation", activation_name(p.trunk.activation)},
        {"head_activation", activation_name(p.heads[0].activation)},
        {"batchnorm_epsilon", p.batchnorm.epsilon},
        {"batchnorm_momentum", p.batchnorm.momentum},
    };
    json tensors = json::object();
    for (const auto& [name, t] : nn::trainable_tensors(p)) tensors[name] = tensor_to_json(*t);
    tensors["batchnorm.running_mean"] = tensor_to_json(p.batchnorm.running_mean);
    tensors["batchnorm.running_var"] = tensor_to_json(p.batchnorm.running_var);
    doc["tensors"] = std::move(tensors);
    return doc.dump(1);
}

nn::ModelParams checkpoint_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion)
            throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));

        const auto& arch = doc.at("architecture");
        const auto input_dim = arch.at("input_dim").get<Eigen::Index>();
        const auto units = arch.at("lstm_units").get<std::vector<Eigen::Index>>();
        const auto dense = arch.at("dense_units").get<Eigen::Index>();

        nn::ModelParams p = nn::init_params(input_dim, units, 0, dense);
        p.trunk.activation = parse_activation(arch.at("trunk_activation").get<std::string>());
        const auto head_act = parse_activation(arch.at("head_activation").get<std::string>());
        for (auto& h : p.heads) h.activation = head_act;
        p.batchnorm.epsilon = arch.at("batchnorm_epsilon").get<double>();
        p.batchnorm.momentum = arch.at("batchnorm_momentum").get<double>();

        const auto& tensors = doc.at("tensors");
        for (auto& [name, t] : nn::trainable_tensors(p)) *t = tensor_from_json(tensors.at(name), name);
        p.batchnorm.running_mean = tensor_from_json(tensors.at("batchnorm.running_mean"), "batchnorm.running_mean");
        p.batchnorm.running_var = tensor_from_json(tensors.at("batchnorm.running_var"), "batchnorm.running_var");
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint shapes do not chain: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams& p)
{
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write " + path.string());
    out << checkpoint_to_json(p) << '\n';
}

nn::ModelParams load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace ser
