#include "imfas/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "imfas/errors.hpp"
#include "imfas/nn.hpp"

namespace imfas {

namespace {

constexpr char kMagic[8] = {'I', 'M', 'F', 'A', 'S', 'C', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("checkpoint: truncated file");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    if (len > 4096) throw IoError("checkpoint: implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw IoError("checkpoint: truncated file");
    return s;
}

// One named f64 tensor: name, rows, cols, payload in column-major order.
void write_tensor(std::ostream& out, const std::string& name, const double* data,
                  std::uint32_t rows, std::uint32_t cols) {
    write_string(out, name);
    write_u32(out, rows);
    write_u32(out, cols);
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(sizeof(double) * rows * cols));
}

Mat read_tensor(std::istream& in, const std::string& expected_name) {
    const std::string name = read_string(in);
    if (name != expected_name) {
        throw IoError("checkpoint: expected tensor '" + expected_name + "', found '" + name +
                      "'");
    }
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!in) throw IoError("checkpoint: truncated tensor payload");
    return m;
}

std::string layer_name(const std::string& prefix, std::size_t k, const char* part) {
    std::ostringstream out;
    out << prefix << '.' << k << '.' << part;
    return out.str();
}

void write_mlp(std::ostream& out, const std::string& prefix, const MlpParams& mlp) {
    write_u32(out, static_cast<std::uint32_t>(mlp.size()));
    for (std::size_t k = 0; k < mlp.size(); ++k) {
        write_string(out, activation_name(mlp[k].activation));
        write_tensor(out, layer_name(prefix, k, "weights"), mlp[k].weights.data(),
                     static_cast<std::uint32_t>(mlp[k].weights.rows()),
                     static_cast<std::uint32_t>(mlp[k].weights.cols()));
        write_tensor(out, layer_name(prefix, k, "bias"), mlp[k].bias.data(),
                     static_cast<std::uint32_t>(mlp[k].bias.size()), 1);
    }
}

MlpParams read_mlp(std::istream& in, const std::string& prefix) {
    const std::uint32_t layers = read_u32(in);
    MlpParams mlp;
    for (std::uint32_t k = 0; k < layers; ++k) {
        DenseLayer layer;
        layer.activation = activation_from_name(read_string(in));
        layer.weights = read_tensor(in, layer_name(prefix, k, "weights"));
        layer.bias = read_tensor(in, layer_name(prefix, k, "bias")).col(0);
        mlp.push_back(std::move(layer));
    }
    return mlp;
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::string& path) {
    model.params.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);

    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);

    const ImfasDims& dims = model.params.dims;
    write_u32(out, static_cast<std::uint32_t>(dims.meta_features));
    write_u32(out, static_cast<std::uint32_t>(dims.algorithms));
    write_u32(out, static_cast<std::uint32_t>(dims.lstm_hidden));
    write_u32(out, static_cast<std::uint32_t>(dims.lstm_layers));
    write_u32(out, static_cast<std::uint32_t>(dims.encoder_hidden.size()));
    for (int w : dims.encoder_hidden) write_u32(out, static_cast<std::uint32_t>(w));

    write_mlp(out, "encoder", model.params.encoder);
    write_u32(out, static_cast<std::uint32_t>(model.params.lstm.layers.size()));
    for (std::size_t k = 0; k < model.params.lstm.layers.size(); ++k) {
        const auto& layer = model.params.lstm.layers[k];
        write_tensor(out, layer_name("lstm", k, "w_ih"), layer.w_ih.data(),
                     static_cast<std::uint32_t>(layer.w_ih.rows()),
                     static_cast<std::uint32_t>(layer.w_ih.cols()));
        write_tensor(out, layer_name("lstm", k, "w_hh"), layer.w_hh.data(),
                     static_cast<std::uint32_t>(layer.w_hh.rows()),
                     static_cast<std::uint32_t>(layer.w_hh.cols()));
        write_tensor(out, layer_name("lstm", k, "bias"), layer.bias.data(),
                     static_cast<std::uint32_t>(layer.bias.size()), 1);
    }
    write_mlp(out, "readout", model.params.readout);

    write_tensor(out, "feature_scaler.mean", model.scaler.mean.data(),
                 static_cast<std::uint32_t>(model.scaler.mean.size()), 1);
    write_tensor(out, "feature_scaler.inv_sd", model.scaler.inv_sd.data(),
                 static_cast<std::uint32_t>(model.scaler.inv_sd.size()), 1);

    if (!out.good()) throw IoError("checkpoint write failed: " + path);
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not an imfas checkpoint: " + path);
    }
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }

    TrainedModel model;
    ImfasDims& dims = model.params.dims;
    dims.meta_features = static_cast<int>(read_u32(in));
    dims.algorithms = static_cast<int>(read_u32(in));
    dims.lstm_hidden = static_cast<int>(read_u32(in));
    dims.lstm_layers = static_cast<int>(read_u32(in));
    const std::uint32_t enc_layers = read_u32(in);
    dims.encoder_hidden.clear();
    for (std::uint32_t k = 0; k < enc_layers; ++k) {
        dims.encoder_hidden.push_back(static_cast<int>(read_u32(in)));
    }

    model.params.encoder = read_mlp(in, "encoder");
    const std::uint32_t lstm_layers = read_u32(in);
    for (std::uint32_t k = 0; k < lstm_layers; ++k) {
        LstmLayerParams layer;
        layer.w_ih = read_tensor(in, layer_name("lstm", k, "w_ih"));
        layer.w_hh = read_tensor(in, layer_name("lstm", k, "w_hh"));
        layer.bias = read_tensor(in, layer_name("lstm", k, "bias")).col(0);
        model.params.lstm.layers.push_back(std::move(layer));
    }
    model.params.readout = read_mlp(in, "readout");

    model.scaler.mean = read_tensor(in, "feature_scaler.mean").col(0);
    model.scaler.inv_sd = read_tensor(in, "feature_scaler.inv_sd").col(0);

    model.params.validate();
    return model;
}

}  // namespace imfas
