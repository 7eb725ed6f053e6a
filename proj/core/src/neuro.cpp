#include "feel/neuro.hpp"

#include "feel/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace feel::neuro {

namespace {

constexpr int kBlobFormatVersion = 1;

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    throw std::invalid_argument("unknown activation");
}

Activation activation_from(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softmax") return Activation::softmax;
    throw std::runtime_error("unknown activation '" + name + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& blob) {
    auto p = blob;
    p += ".json";
    return p;
}

}  // namespace

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0) || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 || !(epsilon > 0.0)) {
        throw std::invalid_argument("invalid Adam configuration");
    }
}

MlpNet::MlpNet(std::size_t input_dim, std::vector<std::size_t> hidden, std::vector<HeadSpec> heads)
    : heads_(std::move(heads)) {
    if (input_dim == 0 || heads_.empty()) {
        throw std::invalid_argument("MlpNet needs a positive input width and at least one head");
    }
    std::size_t out = 0;
    for (const auto& h : heads_) {
        if (h.width == 0) {
            throw std::invalid_argument("MlpNet head width must be positive");
        }
        out += h.width;
    }
    sizes_.push_back(input_dim);
    for (auto w : hidden) {
        if (w == 0) {
            throw std::invalid_argument("MlpNet hidden width must be positive");
        }
        sizes_.push_back(w);
    }
    sizes_.push_back(out);

    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(count);
        count += (sizes_[l] + 1) * sizes_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
}

Eigen::Map<const Eigen::MatrixXd> MlpNet::weight(std::size_t l) const {
    return {params_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
            static_cast<Eigen::Index>(sizes_[l])};
}

Eigen::Map<const Eigen::VectorXd> MlpNet::bias(std::size_t l) const {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], static_cast<Eigen::Index>(sizes_[l + 1])};
}

void MlpNet::apply_heads(Eigen::MatrixXd& z) const {
    Eigen::Index row = 0;
    for (const auto& h : heads_) {
        const auto w = static_cast<Eigen::Index>(h.width);
        auto block = z.middleRows(row, w);
        switch (h.activation) {
            case Activation::identity:
                break;
            case Activation::sigmoid:
                block = (1.0 + (-block.array()).exp()).inverse().matrix();
                break;
            case Activation::softmax:
                for (Eigen::Index j = 0; j < block.cols(); ++j) {
                    auto col = block.col(j);
                    col = (col.array() - col.maxCoeff()).exp().matrix();
                    col /= col.sum();
                }
                break;
        }
        row += w;
    }
}

void MlpNet::run(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd* head_noise, Cache& cache) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
        throw std::invalid_argument("MlpNet: input dimension mismatch");
    }
    if (head_noise != nullptr &&
        (static_cast<std::size_t>(head_noise->rows()) != output_dim() || head_noise->cols() != inputs.cols())) {
        throw std::invalid_argument("MlpNet: head noise dimension mismatch");
    }
    const auto n = layers();
    cache.pre.resize(n);
    cache.post.resize(n + 1);
    cache.post[0] = inputs;
    for (std::size_t l = 0; l < n; ++l) {
        Eigen::MatrixXd z = weight(l) * cache.post[l];
        z.colwise() += bias(l);
        cache.pre[l] = z;
        if (l + 1 < n) {
            cache.post[l + 1] = z.cwiseMax(0.0);
        } else {
            if (head_noise != nullptr) {
                z += *head_noise;
            }
            apply_heads(z);
            cache.post[l + 1] = std::move(z);
        }
    }
}

Eigen::VectorXd MlpNet::forward(const Eigen::VectorXd& input) const {
    Cache cache;
    run(input, nullptr, cache);
    return cache.post.back().col(0);
}

Eigen::MatrixXd MlpNet::forward_batch(const Eigen::MatrixXd& inputs) const {
    Cache cache;
    run(inputs, nullptr, cache);
    return std::move(cache.post.back());
}

Eigen::MatrixXd MlpNet::forward_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& head_noise) const {
    Cache cache;
    run(inputs, &head_noise, cache);
    return std::move(cache.post.back());
}

Gradients MlpNet::backward(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grad) const {
    if (static_cast<std::size_t>(output_grad.rows()) != output_dim() || output_grad.cols() != inputs.cols()) {
        throw std::invalid_argument("MlpNet: output gradient dimension mismatch");
    }
    Cache cache;
    run(inputs, nullptr, cache);

    // Output-layer pre-activation gradient, head by head.
    const auto& y = cache.post.back();
    Eigen::MatrixXd dz = output_grad;
    Eigen::Index row = 0;
    for (const auto& h : heads_) {
        const auto w = static_cast<Eigen::Index>(h.width);
        auto g = dz.middleRows(row, w);
        const auto yh = y.middleRows(row, w);
        switch (h.activation) {
            case Activation::identity:
                break;
            case Activation::sigmoid:
                g = (g.array() * yh.array() * (1.0 - yh.array())).matrix();
                break;
            case Activation::softmax: {
                const Eigen::RowVectorXd dots = (g.array() * yh.array()).colwise().sum();
                g = (yh.array() * (g.rowwise() - dots).array()).matrix();
                break;
            }
        }
        row += w;
    }

    Gradients grads;
    grads.params = Eigen::VectorXd::Zero(params_.size());
    for (std::size_t l = layers(); l-- > 0;) {
        const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
        const auto in = static_cast<Eigen::Index>(sizes_[l]);
        Eigen::Map<Eigen::MatrixXd> dw(grads.params.data() + offsets_[l], out, in);
        Eigen::Map<Eigen::VectorXd> db(grads.params.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], out);
        dw.noalias() = dz * cache.post[l].transpose();
        db = dz.rowwise().sum();
        Eigen::MatrixXd da = weight(l).transpose() * dz;
        if (l == 0) {
            grads.input = std::move(da);
        } else {
            dz = (cache.pre[l - 1].array() > 0.0).select(da, 0.0);
        }
    }
    return grads;
}

void init_params(MlpNet& net, std::uint64_t seed) {
    Rng rng(seed);
    auto& p = net.parameters();
    p.setZero();
    const auto& sizes = net.layer_sizes();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        const std::size_t nw = sizes[l] * sizes[l + 1];
        for (std::size_t i = 0; i < nw; ++i) {
            p[static_cast<Eigen::Index>(offset + i)] = rng.uniform(-bound, bound);
        }
        offset += nw + sizes[l + 1];
    }
    net.adam_state() = AdamState{};
}

void adam_step(MlpNet& net, const Eigen::VectorXd& grads, const AdamConfig& config) {
    auto& p = net.parameters();
    if (grads.size() != p.size()) {
        throw std::invalid_argument("adam_step: gradient length does not match parameter count");
    }
    config.validate();
    auto& st = net.adam_state();
    if (st.first_moment.size() != p.size()) {
        st.first_moment = Eigen::VectorXd::Zero(p.size());
        st.second_moment = Eigen::VectorXd::Zero(p.size());
        st.step = 0;
    }
    ++st.step;
    st.first_moment = config.beta1 * st.first_moment + (1.0 - config.beta1) * grads;
    st.second_moment = config.beta2 * st.second_moment + (1.0 - config.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(st.step));
    p.array() -= config.learning_rate * (st.first_moment.array() / c1) /
                 ((st.second_moment.array() / c2).sqrt() + config.epsilon);
}

void soft_update(MlpNet& target, const MlpNet& main, double tau) {
    if (!target.same_architecture(main)) {
        throw std::invalid_argument("soft_update: architecture mismatch");
    }
    if (tau < 0.0 || tau > 1.0) {
        throw std::invalid_argument("soft_update: tau must lie in [0, 1]");
    }
    auto& t = target.parameters();
    const auto& m = main.parameters();
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        t[i] = tau * m[i] + (1.0 - tau) * t[i];
    }
}

void save_net(const MlpNet& net, const std::filesystem::path& blob) {
    nlohmann::json meta;
    meta["format"] = "feel-mlp";
    meta["version"] = kBlobFormatVersion;
    meta["layer_sizes"] = net.layer_sizes();
    meta["hidden_activation"] = "relu";
    auto heads = nlohmann::json::array();
    for (const auto& h : net.heads()) {
        heads.push_back({{"width", h.width}, {"activation", activation_name(h.activation)}});
    }
    meta["heads"] = heads;
    meta["parameter_count"] = net.parameter_count();
    meta["dtype"] = "float64-le";

    std::ofstream out(blob, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + blob.string() + " for writing");
    }
    const auto& p = net.parameters();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(p[i]);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b) {
            bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
        }
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
    std::ofstream side(sidecar_path(blob));
    side << meta.dump(2) << '\n';
    if (!out || !side) {
        throw std::runtime_error("failed writing network " + blob.string());
    }
}

MlpNet load_net(const std::filesystem::path& blob) {
    std::ifstream side(sidecar_path(blob));
    if (!side) {
        throw std::runtime_error("missing network sidecar for " + blob.string());
    }
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed network sidecar: " + std::string(e.what()));
    }
    if (meta.value("format", "") != "feel-mlp" || meta.value("version", 0) != kBlobFormatVersion) {
        throw std::runtime_error("unsupported network format in " + blob.string());
    }
    const auto sizes = meta.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2) {
        throw std::runtime_error("network sidecar has fewer than two layers");
    }
    std::vector<HeadSpec> heads;
    for (const auto& h : meta.at("heads")) {
        heads.push_back({h.at("width").get<std::size_t>(), activation_from(h.at("activation").get<std::string>())});
    }
    MlpNet net(sizes.front(), std::vector<std::size_t>(sizes.begin() + 1, sizes.end() - 1), heads);
    if (net.output_dim() != sizes.back() || net.parameter_count() != meta.at("parameter_count").get<std::size_t>()) {
        throw std::runtime_error("network sidecar is inconsistent");
    }

    std::ifstream in(blob, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + blob.string());
    }
    auto& p = net.parameters();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
            throw std::runtime_error("network blob is shorter than its sidecar declares");
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        }
        p[i] = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("network blob is longer than its sidecar declares");
    }
    return net;
}

}  // namespace feel::neuro
