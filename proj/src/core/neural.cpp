#include "core/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "core/common.hpp"
#include "core/serialize.hpp"
#include "core/text.hpp"

namespace tabret {

namespace {

constexpr double kInitRange = 0.08;

void uniform_fill(Eigen::MatrixXd& m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-kInitRange, kInitRange);
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
}

GruParams init_gru(int input_dim, int hidden_dim, std::mt19937_64& rng) {
    GruParams p;
    p.Wz.resize(hidden_dim, input_dim);
    p.Uz.resize(hidden_dim, hidden_dim);
    p.Wr.resize(hidden_dim, input_dim);
    p.Ur.resize(hidden_dim, hidden_dim);
    p.Wh.resize(hidden_dim, input_dim);
    p.Uh.resize(hidden_dim, hidden_dim);
    for (Eigen::MatrixXd* m : {&p.Wz, &p.Uz, &p.Wr, &p.Ur, &p.Wh, &p.Uh}) uniform_fill(*m, rng);
    p.bz = Eigen::VectorXd::Zero(hidden_dim);
    p.br = Eigen::VectorXd::Zero(hidden_dim);
    p.bh = Eigen::VectorXd::Zero(hidden_dim);
    return p;
}

struct BiGruCache {
    std::vector<int> ids;
    GruRunCache fwd, bwd;
    Eigen::VectorXd encoding;  // [fwd final; bwd final]
};

BiGruCache encode_bigru(const AspectModel& model, const GruParams& fwd, const GruParams& bwd,
                        const std::vector<std::string>& tokens) {
    BiGruCache cache;
    cache.ids.reserve(tokens.size());
    for (const auto& t : tokens) cache.ids.push_back(model.vocab.id(t));
    std::vector<Eigen::VectorXd> inputs, reversed;
    inputs.reserve(cache.ids.size());
    for (int id : cache.ids) inputs.push_back(model.embed(id));
    reversed.assign(inputs.rbegin(), inputs.rend());
    cache.fwd = gru_run(fwd, inputs);
    cache.bwd = gru_run(bwd, reversed);
    cache.encoding.resize(2 * model.hidden_dim);
    cache.encoding << cache.fwd.final_state(), cache.bwd.final_state();
    return cache;
}

void bigru_backward(const AspectModel& model, const GruParams& fwd, const GruParams& bwd,
                    const BiGruCache& cache, const Eigen::VectorXd& dencoding, GruGrads& fwd_grads,
                    GruGrads& bwd_grads, Eigen::MatrixXd& dembeddings) {
    int h = model.hidden_dim;
    std::vector<Eigen::VectorXd> dfwd_inputs, dbwd_inputs;
    gru_run_backward(fwd, cache.fwd, dencoding.head(h), fwd_grads, dfwd_inputs);
    gru_run_backward(bwd, cache.bwd, dencoding.tail(h), bwd_grads, dbwd_inputs);
    size_t n = cache.ids.size();
    for (size_t i = 0; i < n; ++i) {
        dembeddings.row(cache.ids[i]) += dfwd_inputs[i].transpose();
        dembeddings.row(cache.ids[i]) += dbwd_inputs[n - 1 - i].transpose();
    }
}

struct AttentionCache {
    std::vector<double> scores;  // tanh outputs
    std::vector<double> alpha;
    Eigen::VectorXd read;
};

AttentionCache attention_forward(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                                 const AttentionParams& params) {
    AttentionCache cache;
    size_t n = memory.size();
    int mem_dim = static_cast<int>(memory[0].size());
    cache.scores.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double pre = params.w.head(mem_dim).dot(memory[i]) + params.w.tail(v_q.size()).dot(v_q) + params.b;
        cache.scores[i] = std::tanh(pre);
    }
    double max_s = *std::max_element(cache.scores.begin(), cache.scores.end());
    double denom = 0.0;
    cache.alpha.resize(n);
    for (size_t i = 0; i < n; ++i) {
        cache.alpha[i] = std::exp(cache.scores[i] - max_s);
        denom += cache.alpha[i];
    }
    cache.read = Eigen::VectorXd::Zero(mem_dim);
    for (size_t i = 0; i < n; ++i) {
        cache.alpha[i] /= denom;
        cache.read += cache.alpha[i] * memory[i];
    }
    return cache;
}

// Backpropagates through read and attention scores; dmemory collects the
// per-cell gradients, dv_q accumulates.
void attention_backward(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                        const AttentionParams& params, const AttentionCache& cache,
                        const Eigen::VectorXd& dread, std::vector<Eigen::VectorXd>& dmemory,
                        Eigen::VectorXd& dv_q, Eigen::VectorXd& dw, double& db) {
    size_t n = memory.size();
    int mem_dim = static_cast<int>(memory[0].size());
    dmemory.assign(n, Eigen::VectorXd::Zero(mem_dim));

    std::vector<double> dalpha(n);
    for (size_t i = 0; i < n; ++i) {
        dalpha[i] = dread.dot(memory[i]);
        dmemory[i] += cache.alpha[i] * dread;
    }
    double weighted = 0.0;
    for (size_t i = 0; i < n; ++i) weighted += cache.alpha[i] * dalpha[i];
    for (size_t i = 0; i < n; ++i) {
        double dscore = cache.alpha[i] * (dalpha[i] - weighted);
        double dpre = dscore * (1.0 - cache.scores[i] * cache.scores[i]);
        dw.head(mem_dim) += dpre * memory[i];
        dw.tail(v_q.size()) += dpre * v_q;
        db += dpre;
        dmemory[i] += dpre * params.w.head(mem_dim);
        dv_q += dpre * params.w.tail(v_q.size());
    }
}

struct HeadCache {
    Eigen::VectorXd input;
    Eigen::Vector2d logits;
    Eigen::Vector2d probs;
};

HeadCache head_forward(const OutputLayer& output, const Eigen::VectorXd& input) {
    HeadCache cache;
    cache.input = input;
    cache.logits = output.W * input + output.b;
    double m = cache.logits.maxCoeff();
    Eigen::Vector2d ex = (cache.logits.array() - m).exp();
    cache.probs = ex / ex.sum();
    return cache;
}

// NLL gradient on the logits for the given target index.
Eigen::Vector2d head_dlogits(const HeadCache& cache, int target) {
    Eigen::Vector2d d = cache.probs;
    d[target] -= 1.0;
    return d;
}

std::vector<std::string> model_source_tokens(const Table& table, NeuralAspect aspect) {
    return aspect_text(table, source_aspect(aspect));
}

struct TensorView {
    std::string name;
    double* data;
    size_t size;
};

void gru_views(const std::string& prefix, GruParams& p, std::vector<TensorView>& out) {
    if (p.empty()) return;
    out.push_back({prefix + ".Wz", p.Wz.data(), static_cast<size_t>(p.Wz.size())});
    out.push_back({prefix + ".Uz", p.Uz.data(), static_cast<size_t>(p.Uz.size())});
    out.push_back({prefix + ".Wr", p.Wr.data(), static_cast<size_t>(p.Wr.size())});
    out.push_back({prefix + ".Ur", p.Ur.data(), static_cast<size_t>(p.Ur.size())});
    out.push_back({prefix + ".Wh", p.Wh.data(), static_cast<size_t>(p.Wh.size())});
    out.push_back({prefix + ".Uh", p.Uh.data(), static_cast<size_t>(p.Uh.size())});
    out.push_back({prefix + ".bz", p.bz.data(), static_cast<size_t>(p.bz.size())});
    out.push_back({prefix + ".br", p.br.data(), static_cast<size_t>(p.br.size())});
    out.push_back({prefix + ".bh", p.bh.data(), static_cast<size_t>(p.bh.size())});
}

void gru_grad_views(const std::string& prefix, const GruParams& shape, GruGrads& g,
                    std::vector<TensorView>& out) {
    if (shape.empty()) return;
    out.push_back({prefix + ".Wz", g.Wz.data(), static_cast<size_t>(g.Wz.size())});
    out.push_back({prefix + ".Uz", g.Uz.data(), static_cast<size_t>(g.Uz.size())});
    out.push_back({prefix + ".Wr", g.Wr.data(), static_cast<size_t>(g.Wr.size())});
    out.push_back({prefix + ".Ur", g.Ur.data(), static_cast<size_t>(g.Ur.size())});
    out.push_back({prefix + ".Wh", g.Wh.data(), static_cast<size_t>(g.Wh.size())});
    out.push_back({prefix + ".Uh", g.Uh.data(), static_cast<size_t>(g.Uh.size())});
    out.push_back({prefix + ".bz", g.bz.data(), static_cast<size_t>(g.bz.size())});
    out.push_back({prefix + ".br", g.br.data(), static_cast<size_t>(g.br.size())});
    out.push_back({prefix + ".bh", g.bh.data(), static_cast<size_t>(g.bh.size())});
}

std::vector<TensorView> model_views(AspectModel& m) {
    std::vector<TensorView> out;
    out.push_back({"embeddings", m.embeddings.data(), static_cast<size_t>(m.embeddings.size())});
    gru_views("query_fwd", m.query_fwd, out);
    gru_views("query_bwd", m.query_bwd, out);
    gru_views("caption_fwd", m.caption_fwd, out);
    gru_views("caption_bwd", m.caption_bwd, out);
    if (m.attention.w.size() > 0) {
        out.push_back({"attention.w", m.attention.w.data(), static_cast<size_t>(m.attention.w.size())});
        out.push_back({"attention.b", &m.attention.b, 1});
    }
    out.push_back({"output.W", m.output.W.data(), static_cast<size_t>(m.output.W.size())});
    out.push_back({"output.b", m.output.b.data(), static_cast<size_t>(m.output.b.size())});
    return out;
}

std::vector<TensorView> grad_views(const AspectModel& m, AspectModelGrads& g) {
    std::vector<TensorView> out;
    out.push_back({"embeddings", g.embeddings.data(), static_cast<size_t>(g.embeddings.size())});
    gru_grad_views("query_fwd", m.query_fwd, g.query_fwd, out);
    gru_grad_views("query_bwd", m.query_bwd, g.query_bwd, out);
    gru_grad_views("caption_fwd", m.caption_fwd, g.caption_fwd, out);
    gru_grad_views("caption_bwd", m.caption_bwd, g.caption_bwd, out);
    if (m.attention.w.size() > 0) {
        out.push_back({"attention.w", g.attention_w.data(), static_cast<size_t>(g.attention_w.size())});
        out.push_back({"attention.b", &g.attention_b, 1});
    }
    out.push_back({"output.W", g.output_W.data(), static_cast<size_t>(g.output_W.size())});
    out.push_back({"output.b", g.output_b.data(), static_cast<size_t>(g.output_b.size())});
    return out;
}

// ---- extended-precision forward for the finite-difference side -------------
//
// Central differences at eps = 1e-5 need loss values accurate to ~1e-17 to
// resolve a 1e-4 relative bound against the 1e-8 floor; double roundoff is
// ~1e-16. The numeric side therefore evaluates the loss in long double,
// mirroring the double forward exactly.

using VecLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

struct GruLD {
    MatLD Wz, Uz, Wr, Ur, Wh, Uh;
    VecLD bz, br, bh;
    bool present = false;
};

struct ModelLD {
    MatLD embeddings;
    GruLD query_fwd, query_bwd, caption_fwd, caption_bwd;
    VecLD attention_w;
    long double attention_b = 0.0L;
    bool has_attention = false;
    MatLD output_W;
    VecLD output_b;
};

GruLD to_ld(const GruParams& p) {
    GruLD g;
    if (p.empty()) return g;
    g.present = true;
    g.Wz = p.Wz.cast<long double>();
    g.Uz = p.Uz.cast<long double>();
    g.Wr = p.Wr.cast<long double>();
    g.Ur = p.Ur.cast<long double>();
    g.Wh = p.Wh.cast<long double>();
    g.Uh = p.Uh.cast<long double>();
    g.bz = p.bz.cast<long double>();
    g.br = p.br.cast<long double>();
    g.bh = p.bh.cast<long double>();
    return g;
}

ModelLD model_to_ld(const AspectModel& m) {
    ModelLD out;
    out.embeddings = m.embeddings.cast<long double>();
    out.query_fwd = to_ld(m.query_fwd);
    out.query_bwd = to_ld(m.query_bwd);
    out.caption_fwd = to_ld(m.caption_fwd);
    out.caption_bwd = to_ld(m.caption_bwd);
    if (m.attention.w.size() > 0) {
        out.has_attention = true;
        out.attention_w = m.attention.w.cast<long double>();
        out.attention_b = m.attention.b;
    }
    out.output_W = m.output.W.cast<long double>();
    out.output_b = m.output.b.cast<long double>();
    return out;
}

struct TensorViewLD {
    std::string name;
    long double* data;
    size_t size;
};

void gru_views_ld(const std::string& prefix, GruLD& p, std::vector<TensorViewLD>& out) {
    if (!p.present) return;
    out.push_back({prefix + ".Wz", p.Wz.data(), static_cast<size_t>(p.Wz.size())});
    out.push_back({prefix + ".Uz", p.Uz.data(), static_cast<size_t>(p.Uz.size())});
    out.push_back({prefix + ".Wr", p.Wr.data(), static_cast<size_t>(p.Wr.size())});
    out.push_back({prefix + ".Ur", p.Ur.data(), static_cast<size_t>(p.Ur.size())});
    out.push_back({prefix + ".Wh", p.Wh.data(), static_cast<size_t>(p.Wh.size())});
    out.push_back({prefix + ".Uh", p.Uh.data(), static_cast<size_t>(p.Uh.size())});
    out.push_back({prefix + ".bz", p.bz.data(), static_cast<size_t>(p.bz.size())});
    out.push_back({prefix + ".br", p.br.data(), static_cast<size_t>(p.br.size())});
    out.push_back({prefix + ".bh", p.bh.data(), static_cast<size_t>(p.bh.size())});
}

std::vector<TensorViewLD> model_views_ld(ModelLD& m) {
    std::vector<TensorViewLD> out;
    out.push_back({"embeddings", m.embeddings.data(), static_cast<size_t>(m.embeddings.size())});
    gru_views_ld("query_fwd", m.query_fwd, out);
    gru_views_ld("query_bwd", m.query_bwd, out);
    gru_views_ld("caption_fwd", m.caption_fwd, out);
    gru_views_ld("caption_bwd", m.caption_bwd, out);
    if (m.has_attention) {
        out.push_back({"attention.w", m.attention_w.data(), static_cast<size_t>(m.attention_w.size())});
        out.push_back({"attention.b", &m.attention_b, 1});
    }
    out.push_back({"output.W", m.output_W.data(), static_cast<size_t>(m.output_W.size())});
    out.push_back({"output.b", m.output_b.data(), static_cast<size_t>(m.output_b.size())});
    return out;
}

VecLD gru_run_final_ld(const GruLD& p, const std::vector<VecLD>& inputs) {
    VecLD h = VecLD::Zero(p.Wz.rows());
    for (const VecLD& e : inputs) {
        VecLD z = (1.0L / (1.0L + (-(p.Wz * e + p.Uz * h + p.bz).array()).exp())).matrix();
        VecLD r = (1.0L / (1.0L + (-(p.Wr * e + p.Ur * h + p.br).array()).exp())).matrix();
        VecLD rh = (r.array() * h.array()).matrix();
        VecLD h_tilde = (p.Wh * e + p.Uh * rh + p.bh).array().tanh().matrix();
        h = (z.array() * h_tilde.array() + (1.0L - z.array()) * h.array()).matrix();
    }
    return h;
}

VecLD encode_bigru_ld(const ModelLD& m, const GruLD& fwd, const GruLD& bwd,
                      const std::vector<int>& ids) {
    std::vector<VecLD> inputs, reversed;
    inputs.reserve(ids.size());
    for (int id : ids) inputs.push_back(m.embeddings.row(id).transpose());
    reversed.assign(inputs.rbegin(), inputs.rend());
    VecLD hf = gru_run_final_ld(fwd, inputs);
    VecLD hb = gru_run_final_ld(bwd, reversed);
    VecLD out(hf.size() + hb.size());
    out << hf, hb;
    return out;
}

long double head_loss_ld(const ModelLD& m, const VecLD& input, int target) {
    VecLD logits = m.output_W * input + m.output_b;
    long double max_logit = std::max(logits[0], logits[1]);
    long double lse = max_logit + std::log(std::exp((long double)(logits[0] - max_logit)) +
                                           std::exp((long double)(logits[1] - max_logit)));
    return lse - logits[target];
}

// Mean loss over the usable examples, mirroring nn_loss_and_grads.
long double nn_loss_ld(const AspectModel& shape, const ModelLD& m,
                       const std::vector<NnExample>& examples) {
    long double loss = 0.0L;
    size_t used = 0;
    for (const auto& ex : examples) {
        if (ex.query_tokens.empty()) continue;
        int target = ex.label == 1 ? 0 : 1;
        std::vector<int> query_ids;
        query_ids.reserve(ex.query_tokens.size());
        for (const auto& t : ex.query_tokens) query_ids.push_back(shape.vocab.id(t));

        if (shape.aspect == NeuralAspect::Caption) {
            std::vector<std::string> caption_tokens = aspect_text(*ex.table, Aspect::Caption);
            if (caption_tokens.empty()) continue;
            std::vector<int> cap_ids;
            cap_ids.reserve(caption_tokens.size());
            for (const auto& t : caption_tokens) cap_ids.push_back(shape.vocab.id(t));
            VecLD v_q = encode_bigru_ld(m, m.query_fwd, m.query_bwd, query_ids);
            VecLD v_cap = encode_bigru_ld(m, m.caption_fwd, m.caption_bwd, cap_ids);
            VecLD u(v_cap.size() + v_q.size());
            u << v_cap, v_q;
            loss += head_loss_ld(m, u, target);
            ++used;
            continue;
        }

        MemorySet memory = build_memory_set(*ex.table, shape);
        if (memory.size() == 0) continue;
        std::vector<VecLD> mem_ld;
        mem_ld.reserve(memory.size());
        for (const LinearCombo& combo : memory.combos) {
            VecLD v = VecLD::Zero(shape.embed_dim);
            for (const auto& [id, coeff] : combo.terms) {
                v += (long double)coeff * m.embeddings.row(id).transpose();
            }
            mem_ld.push_back(std::move(v));
        }
        VecLD v_q = encode_bigru_ld(m, m.query_fwd, m.query_bwd, query_ids);

        int mem_dim = shape.embed_dim;
        size_t n = mem_ld.size();
        std::vector<long double> scores(n);
        for (size_t i = 0; i < n; ++i) {
            long double pre = m.attention_w.head(mem_dim).dot(mem_ld[i]) +
                              m.attention_w.tail(v_q.size()).dot(v_q) + m.attention_b;
            scores[i] = std::tanh(pre);
        }
        long double max_s = scores[0];
        for (long double s : scores) max_s = std::max(max_s, s);
        long double denom = 0.0L;
        std::vector<long double> alpha(n);
        for (size_t i = 0; i < n; ++i) {
            alpha[i] = std::exp((long double)(scores[i] - max_s));
            denom += alpha[i];
        }
        VecLD read = VecLD::Zero(mem_dim);
        for (size_t i = 0; i < n; ++i) read += (alpha[i] / denom) * mem_ld[i];

        VecLD u(v_q.size() + read.size());
        u << v_q, read;
        loss += head_loss_ld(m, u, target);
        ++used;
    }
    return used == 0 ? 0.0L : loss / static_cast<long double>(used);
}

}  // namespace

const char* neural_aspect_name(NeuralAspect a) {
    switch (a) {
        case NeuralAspect::Header: return "header";
        case NeuralAspect::Cell: return "cell";
        case NeuralAspect::Row: return "row";
        case NeuralAspect::Column: return "column";
        case NeuralAspect::Caption: return "caption";
    }
    return "?";
}

NeuralAspect neural_aspect_from_name(const std::string& name) {
    for (NeuralAspect a : kNeuralAspects) {
        if (name == neural_aspect_name(a)) return a;
    }
    fail(ErrorKind::InvalidArgument, "unknown neural aspect '" + name + "'");
}

Aspect source_aspect(NeuralAspect a) {
    switch (a) {
        case NeuralAspect::Header: return Aspect::Headers;
        case NeuralAspect::Cell:
        case NeuralAspect::Row:
        case NeuralAspect::Column: return Aspect::Cells;
        case NeuralAspect::Caption: return Aspect::Caption;
    }
    return Aspect::Cells;
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& token_lists) {
    std::set<std::string> words;
    for (const auto& list : token_lists) words.insert(list.begin(), list.end());
    Vocab v;
    for (const auto& w : words) v.insert(w);
    return v;
}

int Vocab::id(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? 0 : it->second;
}

void Vocab::insert(const std::string& word) {
    if (!word_to_id_.count(word)) {
        int next = static_cast<int>(word_to_id_.size()) + 1;
        word_to_id_[word] = next;
    }
}

TableMemories build_memories(const Table& table, const AspectModel& model) {
    TableMemories mem;
    int d = model.embed_dim;
    size_t rows = table.num_rows();
    size_t cols = table.num_columns();

    auto combo_of_text = [&](const std::string& text) {
        LinearCombo combo;
        std::vector<std::string> tokens = tokenize(text);
        if (tokens.empty()) return combo;
        double coeff = 1.0 / static_cast<double>(tokens.size());
        for (const auto& t : tokens) combo.terms.emplace_back(model.vocab.id(t), coeff);
        return combo;
    };
    auto vector_of = [&](const LinearCombo& combo) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
        for (const auto& [id, coeff] : combo.terms) v += coeff * model.embed(id);
        return v;
    };

    for (const auto& h : table.headers) {
        mem.headers.combos.push_back(combo_of_text(h));
        mem.headers.vectors.push_back(vector_of(mem.headers.combos.back()));
    }

    // cell vectors first; rows/columns are uniform averages over them
    std::vector<std::vector<LinearCombo>> cell_combos(rows, std::vector<LinearCombo>(cols));
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            cell_combos[r][c] = combo_of_text(table.cells[r][c]);
            mem.cells.combos.push_back(cell_combos[r][c]);
            mem.cells.vectors.push_back(vector_of(cell_combos[r][c]));
        }
    }
    for (size_t r = 0; r < rows; ++r) {
        LinearCombo combo;
        double scale = 1.0 / static_cast<double>(cols);
        for (size_t c = 0; c < cols; ++c)
            for (const auto& [id, coeff] : cell_combos[r][c].terms) combo.terms.emplace_back(id, coeff * scale);
        mem.rows.combos.push_back(combo);
        mem.rows.vectors.push_back(vector_of(combo));
    }
    for (size_t c = 0; c < cols; ++c) {
        LinearCombo combo;
        double scale = 1.0 / static_cast<double>(rows);
        for (size_t r = 0; r < rows; ++r)
            for (const auto& [id, coeff] : cell_combos[r][c].terms) combo.terms.emplace_back(id, coeff * scale);
        mem.columns.combos.push_back(combo);
        mem.columns.vectors.push_back(vector_of(combo));
    }
    return mem;
}

MemorySet build_memory_set(const Table& table, const AspectModel& model) {
    TableMemories mem = build_memories(table, model);
    switch (model.aspect) {
        case NeuralAspect::Header: return std::move(mem.headers);
        case NeuralAspect::Cell: return std::move(mem.cells);
        case NeuralAspect::Row: return std::move(mem.rows);
        case NeuralAspect::Column: return std::move(mem.columns);
        case NeuralAspect::Caption: break;
    }
    fail(ErrorKind::InvalidArgument, "caption model has no memory set");
}

Eigen::VectorXd encode_query(const AspectModel& model, const std::vector<std::string>& tokens) {
    if (tokens.empty()) fail(ErrorKind::InvalidArgument, "encode_query: empty token list");
    return encode_bigru(model, model.query_fwd, model.query_bwd, tokens).encoding;
}

AttentionRead attention_read(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                             const AttentionParams& params) {
    if (memory.empty()) fail(ErrorKind::InvalidArgument, "attention_read: empty memory");
    AttentionCache cache = attention_forward(memory, v_q, params);
    return AttentionRead{cache.alpha, cache.read};
}

double nn1_score(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                 const AspectModel& model) {
    if (memory.empty()) return 0.0;
    AttentionCache att = attention_forward(memory, v_q, model.attention);
    Eigen::VectorXd u(v_q.size() + att.read.size());
    u << v_q, att.read;
    return head_forward(model.output, u).probs[0];
}

double nn2_caption_score(const std::vector<std::string>& caption_tokens,
                         const std::vector<std::string>& query_tokens, const AspectModel& model) {
    if (caption_tokens.empty()) return 0.0;
    Eigen::VectorXd v_q = encode_query(model, query_tokens);
    BiGruCache cap = encode_bigru(model, model.caption_fwd, model.caption_bwd, caption_tokens);
    Eigen::VectorXd u(cap.encoding.size() + v_q.size());
    u << cap.encoding, v_q;
    return head_forward(model.output, u).probs[0];
}

double aspect_score(const AspectModel& model, const std::vector<std::string>& query_tokens,
                    const Table& table) {
    if (model.aspect == NeuralAspect::Caption) {
        return nn2_caption_score(aspect_text(table, Aspect::Caption), query_tokens, model);
    }
    MemorySet memory = build_memory_set(table, model);
    if (memory.size() == 0) return 0.0;
    Eigen::VectorXd v_q = encode_query(model, query_tokens);
    return nn1_score(memory.vectors, v_q, model);
}

Eigen::VectorXd encode_caption(const AspectModel& model, const std::vector<std::string>& caption_tokens) {
    if (caption_tokens.empty()) return Eigen::VectorXd();
    return encode_bigru(model, model.caption_fwd, model.caption_bwd, caption_tokens).encoding;
}

double nn2_from_encodings(const Eigen::VectorXd& caption_encoding, const Eigen::VectorXd& v_q,
                          const AspectModel& model) {
    if (caption_encoding.size() == 0) return 0.0;
    Eigen::VectorXd u(caption_encoding.size() + v_q.size());
    u << caption_encoding, v_q;
    return head_forward(model.output, u).probs[0];
}

std::array<double, 5> neural_feature_vector(const std::vector<std::string>& query_tokens,
                                            const Table& table, const NeuralModels& models) {
    std::array<double, 5> scores{0.0, 0.0, 0.0, 0.0, 0.0};
    for (size_t i = 0; i < kNeuralAspects.size(); ++i) {
        auto it = models.models.find(kNeuralAspects[i]);
        if (it != models.models.end()) scores[i] = aspect_score(it->second, query_tokens, table);
    }
    return scores;
}

AspectModelGrads AspectModelGrads::zeros_like(const AspectModel& model) {
    AspectModelGrads g;
    g.embeddings = Eigen::MatrixXd::Zero(model.embeddings.rows(), model.embeddings.cols());
    g.query_fwd = GruGrads::zeros_like(model.query_fwd);
    g.query_bwd = GruGrads::zeros_like(model.query_bwd);
    if (!model.caption_fwd.empty()) {
        g.caption_fwd = GruGrads::zeros_like(model.caption_fwd);
        g.caption_bwd = GruGrads::zeros_like(model.caption_bwd);
    }
    if (model.attention.w.size() > 0) {
        g.attention_w = Eigen::VectorXd::Zero(model.attention.w.size());
        g.attention_b = 0.0;
    }
    g.output_W = Eigen::MatrixXd::Zero(model.output.W.rows(), model.output.W.cols());
    g.output_b = Eigen::VectorXd::Zero(model.output.b.size());
    return g;
}

AspectModel init_aspect_model(NeuralAspect aspect, const std::vector<NnExample>& examples,
                              const NnTrainConfig& config) {
    std::vector<std::vector<std::string>> token_lists;
    for (const auto& ex : examples) {
        token_lists.push_back(ex.query_tokens);
        token_lists.push_back(model_source_tokens(*ex.table, aspect));
    }
    AspectModel model;
    model.aspect = aspect;
    model.embed_dim = config.embed_dim;
    model.hidden_dim = config.hidden_dim;
    model.vocab = Vocab::build(token_lists);

    std::mt19937_64 rng(derive_seed(config.seed, std::string("nn-init-") + neural_aspect_name(aspect)));
    model.embeddings.resize(static_cast<Eigen::Index>(model.vocab.size()), config.embed_dim);
    uniform_fill(model.embeddings, rng);
    model.query_fwd = init_gru(config.embed_dim, config.hidden_dim, rng);
    model.query_bwd = init_gru(config.embed_dim, config.hidden_dim, rng);

    int head_input;
    if (aspect == NeuralAspect::Caption) {
        model.caption_fwd = init_gru(config.embed_dim, config.hidden_dim, rng);
        model.caption_bwd = init_gru(config.embed_dim, config.hidden_dim, rng);
        head_input = 4 * config.hidden_dim;
    } else {
        model.attention.w.resize(config.embed_dim + 2 * config.hidden_dim);
        Eigen::MatrixXd tmp(model.attention.w.size(), 1);
        uniform_fill(tmp, rng);
        model.attention.w = tmp.col(0);
        model.attention.b = 0.0;
        head_input = 2 * config.hidden_dim + config.embed_dim;
    }
    model.output.W.resize(2, head_input);
    uniform_fill(model.output.W, rng);
    model.output.b = Eigen::VectorXd::Zero(2);
    return model;
}

size_t nn_loss_and_grads(const AspectModel& model, const std::vector<NnExample>& examples,
                         double& loss, AspectModelGrads* grads) {
    loss = 0.0;
    size_t used = 0;
    for (const auto& ex : examples) {
        if (ex.query_tokens.empty()) continue;
        int target = ex.label == 1 ? 0 : 1;

        if (model.aspect == NeuralAspect::Caption) {
            std::vector<std::string> caption_tokens = aspect_text(*ex.table, Aspect::Caption);
            if (caption_tokens.empty()) continue;  // scores 0 by convention, not trainable
            BiGruCache query = encode_bigru(model, model.query_fwd, model.query_bwd, ex.query_tokens);
            BiGruCache cap = encode_bigru(model, model.caption_fwd, model.caption_bwd, caption_tokens);
            Eigen::VectorXd u(cap.encoding.size() + query.encoding.size());
            u << cap.encoding, query.encoding;
            HeadCache head = head_forward(model.output, u);
            loss += -std::log(std::max(head.probs[target], 1e-300));
            ++used;
            if (grads) {
                Eigen::Vector2d dlogits = head_dlogits(head, target);
                grads->output_W += dlogits * u.transpose();
                grads->output_b += dlogits;
                Eigen::VectorXd du = model.output.W.transpose() * dlogits;
                bigru_backward(model, model.caption_fwd, model.caption_bwd, cap, du.head(cap.encoding.size()),
                               grads->caption_fwd, grads->caption_bwd, grads->embeddings);
                bigru_backward(model, model.query_fwd, model.query_bwd, query, du.tail(query.encoding.size()),
                               grads->query_fwd, grads->query_bwd, grads->embeddings);
            }
            continue;
        }

        MemorySet memory = build_memory_set(*ex.table, model);
        if (memory.size() == 0) continue;
        BiGruCache query = encode_bigru(model, model.query_fwd, model.query_bwd, ex.query_tokens);
        AttentionCache att = attention_forward(memory.vectors, query.encoding, model.attention);
        Eigen::VectorXd u(query.encoding.size() + att.read.size());
        u << query.encoding, att.read;
        HeadCache head = head_forward(model.output, u);
        loss += -std::log(std::max(head.probs[target], 1e-300));
        ++used;
        if (grads) {
            Eigen::Vector2d dlogits = head_dlogits(head, target);
            grads->output_W += dlogits * u.transpose();
            grads->output_b += dlogits;
            Eigen::VectorXd du = model.output.W.transpose() * dlogits;
            Eigen::VectorXd dv_q = du.head(query.encoding.size());
            Eigen::VectorXd dread = du.tail(att.read.size());
            std::vector<Eigen::VectorXd> dmemory;
            attention_backward(memory.vectors, query.encoding, model.attention, att, dread, dmemory, dv_q,
                               grads->attention_w, grads->attention_b);
            for (size_t i = 0; i < memory.size(); ++i) {
                for (const auto& [id, coeff] : memory.combos[i].terms) {
                    grads->embeddings.row(id) += coeff * dmemory[i].transpose();
                }
            }
            bigru_backward(model, model.query_fwd, model.query_bwd, query, dv_q, grads->query_fwd,
                           grads->query_bwd, grads->embeddings);
        }
    }
    if (used > 0) {
        loss /= static_cast<double>(used);
        if (grads) {
            double inv = 1.0 / static_cast<double>(used);
            for (TensorView& view : grad_views(model, *grads)) {
                for (size_t i = 0; i < view.size; ++i) view.data[i] *= inv;
            }
        }
    }
    return used;
}

NnTrainResult train_aspect_model(const std::vector<NnExample>& examples, NeuralAspect aspect,
                                 const NnTrainConfig& config) {
    if (config.epochs < 1) fail(ErrorKind::InvalidArgument, "nn training epochs must be >= 1");
    bool has_pos = false, has_neg = false;
    for (const auto& ex : examples) (ex.label == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        fail(ErrorKind::InvalidArgument, "nn training needs both positive and negative examples");
    }

    NnTrainResult result;
    result.model = init_aspect_model(aspect, examples, config);

    std::mt19937_64 rng(derive_seed(config.seed, std::string("nn-train-") + neural_aspect_name(aspect)));
    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        size_t epoch_used = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<NnExample> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

            AspectModelGrads grads = AspectModelGrads::zeros_like(result.model);
            double batch_loss = 0.0;
            size_t used = nn_loss_and_grads(result.model, batch, batch_loss, &grads);
            if (used == 0) continue;
            epoch_loss += batch_loss * static_cast<double>(used);
            epoch_used += used;

            std::vector<TensorView> views = model_views(result.model);
            std::vector<TensorView> gviews = grad_views(result.model, grads);
            for (size_t t = 0; t < views.size(); ++t) {
                for (size_t i = 0; i < views[t].size; ++i) {
                    views[t].data[i] -= config.learning_rate * gviews[t].data[i];
                }
            }
        }
        if (epoch_used == 0) fail(ErrorKind::InvalidArgument, "no trainable examples for aspect model");
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_used));
    }
    return result;
}

GradientCheckResult gradient_check(const AspectModel& model, const std::vector<NnExample>& examples,
                                   double epsilon, size_t coords_per_tensor, uint64_t seed,
                                   const std::string& corrupt_tensor) {
    if (epsilon <= 0.0) fail(ErrorKind::InvalidArgument, "gradient check epsilon must be positive");

    AspectModelGrads grads = AspectModelGrads::zeros_like(model);
    double base_loss = 0.0;
    size_t used = nn_loss_and_grads(model, examples, base_loss, &grads);
    if (used == 0) fail(ErrorKind::InvalidArgument, "gradient check has no usable examples");

    std::vector<TensorView> gviews = grad_views(model, grads);

    if (!corrupt_tensor.empty()) {
        bool found = false;
        for (TensorView& g : gviews) {
            if (g.name == corrupt_tensor) {
                for (size_t i = 0; i < g.size; ++i) g.data[i] = 2.0 * g.data[i] + 0.01;
                found = true;
            }
        }
        if (!found) fail(ErrorKind::InvalidArgument, "unknown tensor to corrupt: " + corrupt_tensor);
    }

    // The numeric side runs in long double; double roundoff in the loss
    // cannot resolve gradients near the 1e-8 floor at eps = 1e-5.
    ModelLD probe = model_to_ld(model);
    std::vector<TensorViewLD> views = model_views_ld(probe);

    std::mt19937_64 rng(derive_seed(seed, "gradient-check"));
    GradientCheckResult result;
    for (size_t t = 0; t < views.size(); ++t) {
        std::vector<size_t> coords;
        if (views[t].size <= coords_per_tensor) {
            coords.resize(views[t].size);
            std::iota(coords.begin(), coords.end(), 0);
        } else {
            std::set<size_t> picked;
            std::uniform_int_distribution<size_t> dist(0, views[t].size - 1);
            while (picked.size() < coords_per_tensor) picked.insert(dist(rng));
            coords.assign(picked.begin(), picked.end());
        }
        for (size_t c : coords) {
            long double original = views[t].data[c];
            views[t].data[c] = original + static_cast<long double>(epsilon);
            long double loss_plus = nn_loss_ld(model, probe, examples);
            views[t].data[c] = original - static_cast<long double>(epsilon);
            long double loss_minus = nn_loss_ld(model, probe, examples);
            views[t].data[c] = original;

            double numeric =
                static_cast<double>((loss_plus - loss_minus) / (2.0L * static_cast<long double>(epsilon)));
            double analytic = gviews[t].data[c];
            double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            ++result.coords_checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_tensor = views[t].name;
            }
        }
    }
    return result;
}

void NeuralModels::save(const std::string& path) const {
    BinaryWriter w(path, "TBRTNNMDL1");
    w.write_u64(models.size());
    for (const auto& [aspect, model] : models) {
        w.write_string(neural_aspect_name(aspect));
        w.write_u64(static_cast<uint64_t>(model.embed_dim));
        w.write_u64(static_cast<uint64_t>(model.hidden_dim));
        w.write_u64(model.vocab.words().size());
        for (const auto& [word, id] : model.vocab.words()) w.write_string(word);
        w.write_matrix(model.embeddings);
        auto write_gru = [&w](const GruParams& p) {
            for (const Eigen::MatrixXd* m : {&p.Wz, &p.Uz, &p.Wr, &p.Ur, &p.Wh, &p.Uh}) w.write_matrix(*m);
            for (const Eigen::VectorXd* v : {&p.bz, &p.br, &p.bh}) w.write_vector(*v);
        };
        write_gru(model.query_fwd);
        write_gru(model.query_bwd);
        if (aspect == NeuralAspect::Caption) {
            write_gru(model.caption_fwd);
            write_gru(model.caption_bwd);
        } else {
            w.write_vector(model.attention.w);
            w.write_double(model.attention.b);
        }
        w.write_matrix(model.output.W);
        w.write_vector(model.output.b);
    }
}

NeuralModels NeuralModels::load(const std::string& path) {
    BinaryReader r(path, "TBRTNNMDL1");
    NeuralModels bundle;
    uint64_t count = r.read_u64();
    for (uint64_t i = 0; i < count; ++i) {
        AspectModel model;
        model.aspect = neural_aspect_from_name(r.read_string());
        model.embed_dim = static_cast<int>(r.read_u64());
        model.hidden_dim = static_cast<int>(r.read_u64());
        uint64_t vocab_count = r.read_u64();
        for (uint64_t v = 0; v < vocab_count; ++v) model.vocab.insert(r.read_string());
        model.embeddings = r.read_matrix(model.vocab.size(), model.embed_dim);
        auto read_gru = [&r](int input_dim, int hidden_dim) {
            GruParams p;
            p.Wz = r.read_matrix(hidden_dim, input_dim);
            p.Uz = r.read_matrix(hidden_dim, hidden_dim);
            p.Wr = r.read_matrix(hidden_dim, input_dim);
            p.Ur = r.read_matrix(hidden_dim, hidden_dim);
            p.Wh = r.read_matrix(hidden_dim, input_dim);
            p.Uh = r.read_matrix(hidden_dim, hidden_dim);
            p.bz = r.read_vector(hidden_dim);
            p.br = r.read_vector(hidden_dim);
            p.bh = r.read_vector(hidden_dim);
            return p;
        };
        model.query_fwd = read_gru(model.embed_dim, model.hidden_dim);
        model.query_bwd = read_gru(model.embed_dim, model.hidden_dim);
        int head_input;
        if (model.aspect == NeuralAspect::Caption) {
            model.caption_fwd = read_gru(model.embed_dim, model.hidden_dim);
            model.caption_bwd = read_gru(model.embed_dim, model.hidden_dim);
            head_input = 4 * model.hidden_dim;
        } else {
            model.attention.w = r.read_vector(model.embed_dim + 2 * model.hidden_dim);
            model.attention.b = r.read_double();
            head_input = 2 * model.hidden_dim + model.embed_dim;
        }
        model.output.W = r.read_matrix(2, head_input);
        model.output.b = r.read_vector(2);
        bundle.models[model.aspect] = std::move(model);
    }
    return bundle;
}

}  // namespace tabret
