// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splatpaint/attention.hpp"
#include "splatpaint/common.hpp"
#include "splatpaint/image.hpp"
#include "splatpaint/score_model.hpp"

namespace splatpaint {

/// Small fixed-weight noise predictor with two pre-norm transformer blocks
/// over 4x4 image patches. Untrained, but structurally a conditional denoiser:
/// patch embeddings receive a sinusoidal timestep embedding and a pooled
/// per-patch condition vector (mask, scaled edges, scaled depth, validity, and
/// two hashed text features), and every attention block participates in
/// feature capture and reference blending.
class TinyAttentionUnet final : public ScoreModel {
public:
    static constexpr int kPatch = 4;
    static constexpr int kDim = 16;
    static constexpr int kMlpDim = 32;
    static constexpr int kBlocks = 2;
    static constexpr int kChannels = 3;
    static constexpr int kPatchVec = kPatch * kPatch * kChannels;
    static constexpr int kCondDim = 6;
    static constexpr std::uint32_t kWeightVersion = 1;
    static constexpr std::uint32_t kTensorCount = 6 + 12 * kBlocks + 2;

    struct Block {
        Eigen::VectorXd ln1_gamma, ln1_beta;
        Eigen::MatrixXd wq, wk, wv, wo;
        Eigen::VectorXd ln2_gamma, ln2_beta;
        Eigen::MatrixXd w_mlp1, w_mlp2;
        Eigen::VectorXd b_mlp1, b_mlp2;
    };

    /// Deterministic default weights from a fixed seed.
    explicit TinyAttentionUnet(std::uint64_t seed = 0x5EEDF00DULL) {
        Rng rng(seed);
        const auto init = [&rng](Eigen::MatrixXd& m, int rows, int cols, double gain) {
            m.resize(rows, cols);
            const double scale = gain / std::sqrt(static_cast<double>(rows));
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
        };
        init(w_embed_, kPatchVec, kDim, 0.5);
        b_embed_ = Eigen::VectorXd::Zero(kDim);
        init(w_time_, kDim, kDim, 0.5);
        b_time_ = Eigen::VectorXd::Zero(kDim);
        init(w_cond_, kCondDim, kDim, 0.5);
        b_cond_ = Eigen::VectorXd::Zero(kDim);
        for (Block& block : blocks_) {
            block.ln1_gamma = Eigen::VectorXd::Ones(kDim);
            block.ln1_beta = Eigen::VectorXd::Zero(kDim);
            init(block.wq, kDim, kDim, 0.3);
            init(block.wk, kDim, kDim, 0.3);
            init(block.wv, kDim, kDim, 0.5);
            init(block.wo, kDim, kDim, 0.5);
            block.ln2_gamma = Eigen::VectorXd::Ones(kDim);
            block.ln2_beta = Eigen::VectorXd::Zero(kDim);
            init(block.w_mlp1, kDim, kMlpDim, 0.5);
            block.b_mlp1 = Eigen::VectorXd::Zero(kMlpDim);
            init(block.w_mlp2, kMlpDim, kDim, 0.5);
            block.b_mlp2 = Eigen::VectorXd::Zero(kDim);
        }
        init(w_dec_, kDim, kPatchVec, 0.5);
        b_dec_ = Eigen::VectorXd::Zero(kPatchVec);
    }

    explicit TinyAttentionUnet(const std::string& weights_path) { load_weights(weights_path); }

    void save_weights(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ValidationError("cannot open weight file for writing: " + path);
        out.write("TAUN", 4);
        write_u32(out, kWeightVersion);
        write_u32(out, kTensorCount);
        write_u32(out, 0);
        for_each_tensor_impl(*this, [&](const Eigen::MatrixXd& m) { write_tensor(out, m); },
                             [&](const Eigen::VectorXd& v) { write_vector(out, v); });
        if (!out) throw ValidationError("failed writing weight file: " + path);
    }

    void load_weights(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open weight file: " + path);
        char magic[4];
        in.read(magic, 4);
        if (!in || std::string(magic, 4) != "TAUN")
            throw ValidationError("weight file " + path + " has the wrong magic");
        const std::uint32_t version = read_u32(in, path);
        if (version != kWeightVersion)
            throw ValidationError("weight file " + path + " has unsupported version " + std::to_string(version));
        const std::uint32_t tensors = read_u32(in, path);
        if (tensors != kTensorCount)
            throw ValidationError("weight file " + path + " declares " + std::to_string(tensors) +
                                  " tensors, expected " + std::to_string(kTensorCount));
        read_u32(in, path);  // reserved
        *this = TinyAttentionUnet(0);
        for_each_tensor_impl(*this, [&](Eigen::MatrixXd& m) { read_tensor(in, path, m); },
                             [&](Eigen::VectorXd& v) { read_vector(in, path, v); });
        in.peek();
        if (!in.eof()) throw ValidationError("weight file " + path + " has trailing data");
    }

    ImageD predict_noise(const ImageD& latent, int t, const Condition& cond, const AfpStepView* afp = nullptr,
                         BlockFeatures* capture = nullptr) const override {
        if (latent.channels() != kChannels)
            throw ValidationError("tiny_attention_unet expects a 3-channel latent");
        if (latent.width() % kPatch != 0 || latent.height() % kPatch != 0 || latent.empty())
            throw ValidationError("tiny_attention_unet latent dimensions must be positive multiples of " +
                                  std::to_string(kPatch));
        cond.validate_for(latent);
        if (afp) {
            for (const BlockFeatures* ref : afp->references) {
                if (!ref || ref->keys.size() != kBlocks || ref->values.size() != kBlocks)
                    throw ValidationError("afp reference features do not match the block count");
            }
        }

        const int pw = latent.width() / kPatch;
        const int ph = latent.height() / kPatch;
        const int n = pw * ph;

        Eigen::MatrixXd x(n, kDim);
        {
            const Eigen::RowVectorXd time_embed =
                timestep_embedding(t).transpose() * w_time_ + b_time_.transpose();
            const std::array<double, 2> text = text_features(cond.text);
            Eigen::RowVectorXd patch(kPatchVec);
            Eigen::RowVectorXd cvec(kCondDim);
            for (int token = 0; token < n; ++token) {
                const int px0 = (token % pw) * kPatch;
                const int py0 = (token / pw) * kPatch;
                double mask_sum = 0.0, edge_sum = 0.0, depth_sum = 0.0, valid_sum = 0.0;
                for (int j = 0; j < kPatch; ++j)
                    for (int i = 0; i < kPatch; ++i) {
                        const int ix = px0 + i, iy = py0 + j;
                        for (int c = 0; c < kChannels; ++c)
                            patch[(j * kPatch + i) * kChannels + c] = latent.at(ix, iy, c);
                        if (!cond.mask.empty()) mask_sum += cond.mask.at(ix, iy);
                        if (!cond.edge_map.empty()) edge_sum += cond.edge_map.at(ix, iy);
                        if (!cond.depth_map.empty()) depth_sum += cond.depth_map.at(ix, iy);
                        if (!cond.validity.empty()) valid_sum += cond.validity.at(ix, iy);
                    }
                const double inv = 1.0 / (kPatch * kPatch);
                cvec << mask_sum * inv, cond.cond_scale_texture * edge_sum * inv,
                    cond.cond_scale_depth * depth_sum * inv, valid_sum * inv, text[0], text[1];
                x.row(token) =
                    patch * w_embed_ + b_embed_.transpose() + time_embed + cvec * w_cond_ + b_cond_.transpose();
            }
        }

        for (int b = 0; b < kBlocks; ++b) {
            const Block& block = blocks_[b];
            const Eigen::MatrixXd normed = layer_norm(x, block.ln1_gamma, block.ln1_beta);
            const Eigen::MatrixXd q = normed * block.wq;
            const Eigen::MatrixXd k = normed * block.wk;
            const Eigen::MatrixXd v = normed * block.wv;
            if (capture) {
                capture->keys.push_back(k);
                capture->values.push_back(v);
            }
            Eigen::MatrixXd attended;
            if (afp) {
                std::vector<Eigen::MatrixXd> ref_keys, ref_values;
                ref_keys.reserve(afp->references.size());
                ref_values.reserve(afp->references.size());
                for (const BlockFeatures* ref : afp->references) {
                    ref_keys.push_back(ref->keys[b]);
                    ref_values.push_back(ref->values[b]);
                }
                attended = afp_blend(q, k, v, ref_keys, ref_values, afp->lambda_a);
            } else {
                attended = self_attention(q, k, v);
            }
            x += attended * block.wo;
            const Eigen::MatrixXd normed2 = layer_norm(x, block.ln2_gamma, block.ln2_beta);
            Eigen::MatrixXd hidden = (normed2 * block.w_mlp1).rowwise() + block.b_mlp1.transpose();
            hidden = hidden.unaryExpr([](double u) { return 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0))); });
            x += ((hidden * block.w_mlp2).rowwise() + block.b_mlp2.transpose()).eval();
        }

        ImageD eps(latent.width(), latent.height(), kChannels);
        for (int token = 0; token < n; ++token) {
            const Eigen::RowVectorXd out = x.row(token) * w_dec_ + b_dec_.transpose();
            const int px0 = (token % pw) * kPatch;
            const int py0 = (token / pw) * kPatch;
            for (int j = 0; j < kPatch; ++j)
                for (int i = 0; i < kPatch; ++i)
                    for (int c = 0; c < kChannels; ++c)
                        eps.at(px0 + i, py0 + j, c) = out[(j * kPatch + i) * kChannels + c];
        }
        return eps;
    }

private:
    static Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gamma,
                                      const Eigen::VectorXd& beta) {
        Eigen::MatrixXd out(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double mean = x.row(r).mean();
            const double var = (x.row(r).array() - mean).square().mean();
            out.row(r) = (((x.row(r).array() - mean) / std::sqrt(var + 1e-5)) * gamma.transpose().array() +
                          beta.transpose().array())
                             .matrix();
        }
        return out;
    }

    static Eigen::VectorXd timestep_embedding(int t) {
        Eigen::VectorXd embed(kDim);
        for (int k = 0; k < kDim / 2; ++k) {
            const double freq = std::pow(10000.0, -static_cast<double>(k) / (kDim / 2 - 1));
            embed[2 * k] = std::sin(t * freq);
            embed[2 * k + 1] = std::cos(t * freq);
        }
        return embed;
    }

    static std::array<double, 2> text_features(const std::string& text) {
        if (text.empty()) return {0.0, 0.0};
        const std::uint64_t h = fnv1a64(text);
        const double lo = static_cast<double>(h & 0xffffffffULL) / 2147483648.0 - 1.0;
        const double hi = static_cast<double>(h >> 32) / 2147483648.0 - 1.0;
        return {lo, hi};
    }

    template <typename Self, typename MatFn, typename VecFn>
    static void for_each_tensor_impl(Self& self, MatFn&& mat, VecFn&& vec) {
        mat(self.w_embed_);
        vec(self.b_embed_);
        mat(self.w_time_);
        vec(self.b_time_);
        mat(self.w_cond_);
        vec(self.b_cond_);
        for (auto& block : self.blocks_) {
            vec(block.ln1_gamma);
            vec(block.ln1_beta);
            mat(block.wq);
            mat(block.wk);
            mat(block.wv);
            mat(block.wo);
            vec(block.ln2_gamma);
            vec(block.ln2_beta);
            mat(block.w_mlp1);
            vec(block.b_mlp1);
            mat(block.w_mlp2);
            vec(block.b_mlp2);
        }
        mat(self.w_dec_);
        vec(self.b_dec_);
    }

    static void write_u32(std::ofstream& out, std::uint32_t v) {
        const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.write(bytes, 4);
    }

    static std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
        unsigned char bytes[4];
        in.read(reinterpret_cast<char*>(bytes), 4);
        if (!in) throw ValidationError("weight file " + path + " is truncated");
        return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
               (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
    }

    static void write_f32(std::ofstream& out, double v) {
        const float f = static_cast<float>(v);
        write_u32(out, std::bit_cast<std::uint32_t>(f));
    }

    static double read_f32(std::ifstream& in, const std::string& path) {
        const float f = std::bit_cast<float>(read_u32(in, path));
        if (!std::isfinite(f)) throw ValidationError("weight file " + path + " contains non-finite values");
        return static_cast<double>(f);
    }

    static void write_tensor(std::ofstream& out, const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) write_f32(out, m(r, c));
    }

    static void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) write_f32(out, v[i]);
    }

    static void read_tensor(std::ifstream& in, const std::string& path, Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_f32(in, path);
    }

    static void read_vector(std::ifstream& in, const std::string& path, Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = read_f32(in, path);
    }

    Eigen::MatrixXd w_embed_;
    Eigen::VectorXd b_embed_;
    Eigen::MatrixXd w_time_;
    Eigen::VectorXd b_time_;
    Eigen::MatrixXd w_cond_;
    Eigen::VectorXd b_cond_;
    std::array<Block, kBlocks> blocks_;
    Eigen::MatrixXd w_dec_;
    Eigen::VectorXd b_dec_;
};

}  // namespace splatpaint
