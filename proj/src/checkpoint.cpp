#include "climreg/checkpoint.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"

#include <json.hpp>

#include <fstream>

namespace climreg {

using nlohmann::json;

namespace {

struct NamedTensor {
    std::string name;
    std::vector<double>* data;
    std::vector<std::size_t> shape;
};

std::vector<NamedTensor> checkpoint_tensors(Checkpoint& c) {
    std::vector<NamedTensor> out;
    for (auto& t : c.anchor.tensors()) {
        out.push_back({"anchor." + t.name, t.data, t.shape});
    }
    for (auto& t : c.target.tensors()) {
        out.push_back({"target." + t.name, t.data, t.shape});
    }
    out.push_back({"prototypes", &c.bank.weights,
                   {static_cast<std::size_t>(c.bank.k), static_cast<std::size_t>(c.bank.dim)}});
    out.push_back({"channel_mean", &c.stats.mean, {c.stats.mean.size()}});
    out.push_back({"channel_std", &c.stats.stddev, {c.stats.stddev.size()}});
    return out;
}

json dims_to_json(const EncoderDims& d) {
    return json{{"patch_size", d.patch_size},
                {"n_channels", d.n_channels},
                {"embed_dim", d.embed_dim},
                {"hidden_dim", d.hidden_dim},
                {"latent_dim", d.latent_dim}};
}

EncoderDims dims_from_json(const json& j) {
    EncoderDims d;
    d.patch_size = j.at("patch_size").get<int>();
    d.n_channels = j.at("n_channels").get<int>();
    d.embed_dim = j.at("embed_dim").get<int>();
    d.hidden_dim = j.at("hidden_dim").get<int>();
    d.latent_dim = j.at("latent_dim").get<int>();
    return d;
}

json view_to_json(const ViewConfig& v) {
    return json{{"out_size", v.out_size},
                {"patch_size", v.patch_size},
                {"n_anchors", v.n_anchors},
                {"target_scale", {v.target_scale.lo, v.target_scale.hi}},
                {"anchor_scale", {v.anchor_scale.lo, v.anchor_scale.hi}},
                {"mask_ratio", v.mask_ratio}};
}

ViewConfig view_from_json(const json& j) {
    ViewConfig v;
    v.out_size = j.at("out_size").get<int>();
    v.patch_size = j.at("patch_size").get<int>();
    v.n_anchors = j.at("n_anchors").get<int>();
    v.target_scale = {j.at("target_scale").at(0).get<double>(),
                      j.at("target_scale").at(1).get<double>()};
    v.anchor_scale = {j.at("anchor_scale").at(0).get<double>(),
                      j.at("anchor_scale").at(1).get<double>()};
    v.mask_ratio = j.at("mask_ratio").get<double>();
    return v;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    Checkpoint& c = const_cast<Checkpoint&>(ckpt); // tensor iteration is non-mutating here
    auto tensors = checkpoint_tensors(c);

    json header;
    header["dtype"] = "f32";
    json tensor_list = json::array();
    for (const auto& t : tensors) {
        tensor_list.push_back({{"name", t.name}, {"shape", t.shape}});
    }
    header["tensors"] = tensor_list;
    header["meta"] = {{"dims", dims_to_json(c.anchor.dims)},
                      {"k", c.bank.k},
                      {"view", view_to_json(c.view)}};

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write checkpoint: " + path.string());
    }
    out << header.dump() << '\n';
    std::vector<float> buf;
    for (const auto& t : tensors) {
        buf.resize(t.data->size());
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] = static_cast<float>((*t.data)[i]);
        }
        write_f32_le(out, buf.data(), buf.size());
    }
    if (!out) {
        throw DataError("checkpoint write failed: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint: " + path.string());
    }
    std::string header_line;
    if (!std::getline(in, header_line)) {
        throw DataError("missing checkpoint header");
    }
    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint header: ") + e.what());
    }

    Checkpoint c;
    try {
        if (header.at("dtype").get<std::string>() != "f32") {
            throw DataError("unsupported checkpoint dtype");
        }
        const json& meta = header.at("meta");
        const EncoderDims dims = dims_from_json(meta.at("dims"));
        c.anchor.dims = dims;
        c.target.dims = dims;
        c.bank.k = meta.at("k").get<int>();
        c.bank.dim = dims.latent_dim;
        c.view = view_from_json(meta.at("view"));

        auto tensors = checkpoint_tensors(c);
        const json& tensor_list = header.at("tensors");
        if (tensor_list.size() != tensors.size()) {
            throw DataError("checkpoint tensor list mismatch");
        }
        std::vector<float> buf;
        for (std::size_t t = 0; t < tensors.size(); ++t) {
            const json& jt = tensor_list.at(t);
            if (jt.at("name").get<std::string>() != tensors[t].name) {
                throw DataError("unexpected checkpoint tensor order");
            }
            std::size_t count = 1;
            for (const auto& s : jt.at("shape")) {
                count *= s.get<std::size_t>();
            }
            buf.resize(count);
            read_f32_le(in, buf.data(), count);
            tensors[t].data->assign(buf.begin(), buf.end());
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint header: ") + e.what());
    }
    return c;
}

} // namespace climreg
