#include <doctest.h>

#include <filesystem>

#include <json.hpp>
#include <unistd.h>

#include "ser/checkpoint.hpp"

using namespace ser;
using nlohmann::json;

namespace {

nn::ModelParams trained_looking(std::uint64_t seed)
{
    auto p = nn::init_params(7, {5, 4, 3}, seed, 6);
    p.batchnorm.running_mean = nn::Matrix::Random(1, 7);
    p.batchnorm.running_var = nn::Matrix::Random(1, 7).cwiseAbs().array() + 0.1;
    p.trunk.b = nn::Matrix::Random(1, 6) / 3.0;
    return p;
}

}  // namespace

TEST_CASE("JSON round trip is bit exact")
{
    const auto p = trained_looking(1);
    const auto q = checkpoint_from_json(checkpoint_to_json(p));
    CHECK(nn::fingerprint(p) == nn::fingerprint(q));
    CHECK(q.batchnorm.running_mean == p.batchnorm.running_mean);
    CHECK(q.batchnorm.running_var == p.batchnorm.running_var);
    CHECK(q.lstm_units() == p.lstm_units());
    CHECK(q.heads[1].activation == nn::Activation::Tanh);

    const nn::Matrix x = nn::Matrix::Random(5, 7);
    CHECK(nn::forward(p, nn::as_sequence(x), false).predictions ==
          nn::forward(q, nn::as_sequence(x), false).predictions);
}

TEST_CASE("file round trip")
{
    const auto path = std::filesystem::temp_directory_path() / ("ser_ckpt_" + std::to_string(::getpid()) + ".json");
    const auto p = trained_looking(2);
    save_checkpoint(path, p);
    CHECK(nn::fingerprint(load_checkpoint(path)) == nn::fingerprint(p));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("malformed checkpoints are rejected")
{
    const auto good = json::parse(checkpoint_to_json(trained_looking(3)));

    CHECK_THROWS_AS(checkpoint_from_json("{not json"), CheckpointError);

    auto version = good;
    version["format_version"] = kCheckpointFormatVersion + 1;
    CHECK_THROWS_AS(checkpoint_from_json(version.dump()), CheckpointError);

    auto missing = good;
    missing["tensors"].erase("lstm1.U");
    CHECK_THROWS_AS(checkpoint_from_json(missing.dump()), CheckpointError);

    auto short_data = good;
    short_data["tensors"]["trunk.b"]["data"].erase(0);
    CHECK_THROWS_AS(checkpoint_from_json(short_data.dump()), CheckpointError);

    // consistent tensor, but it no longer chains with its neighbours
    auto chain = good;
    auto& w = chain["tensors"]["trunk.W"];
    w["cols"] = 5;
    w["data"] = std::vector<double>(static_cast<std::size_t>(w["rows"].get<int>() * 5), 0.1);
    CHECK_THROWS_AS(checkpoint_from_json(chain.dump()), CheckpointError);

    auto activation = good;
    activation["architecture"]["head_activation"] = "relu6";
    CHECK_THROWS_AS(checkpoint_from_json(activation.dump()), CheckpointError);
}
