#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "skg/errors.hpp"

namespace skg::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable matrix with its accumulated gradient.
template <typename T>
struct Tensor {
    std::string name;
    Matrix<T> value;
    Matrix<T> grad;

    Tensor() = default;
    Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols))
    {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Row-wise softmax with the max subtracted first.
template <typename T>
Matrix<T> softmax_rows(Matrix<T> const& x)
{
    Matrix<T> y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        T mx = x.row(r).maxCoeff();
        T sum = 0;
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            y(r, c) = std::exp(x(r, c) - mx);
            sum += y(r, c);
        }
        y.row(r) /= sum;
    }
    return y;
}

/// Records a forward computation and replays it backwards. Parameter leaves write their
/// gradients straight into Tensor::grad, so several tapes over one batch accumulate.
template <typename T>
class Tape {
  public:
    using Mat = Matrix<T>;

    struct Var {
        std::size_t id;
    };

    Var constant(Mat m) { return push(std::move(m), {}); }

    Var parameter(Tensor<T>& p)
    {
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
            p.zero_grad();
        }
        Node n;
        n.param = &p;
        m_nodes.push_back(std::move(n));
        return {m_nodes.size() - 1};
    }

    [[nodiscard]] Mat const& value(Var v) const
    {
        auto const& n = m_nodes[v.id];
        return n.param != nullptr ? n.param->value : n.value;
    }

    [[nodiscard]] std::size_t size() const noexcept { return m_nodes.size(); }

    Var matmul(Var a, Var b)
    {
        return push(value(a) * value(b), [this, a, b](std::size_t self) {
            Mat const& g = m_nodes[self].grad;
            grad(a).noalias() += g * value(b).transpose();
            grad(b).noalias() += value(a).transpose() * g;
        });
    }

    /// a * b^T
    Var matmul_transposed(Var a, Var b)
    {
        return push(value(a) * value(b).transpose(), [this, a, b](std::size_t self) {
            Mat const& g = m_nodes[self].grad;
            grad(a).noalias() += g * value(b);
            grad(b).noalias() += g.transpose() * value(a);
        });
    }

    Var add(Var a, Var b)
    {
        check_same_shape(a, b, "add");
        return push(value(a) + value(b), [this, a, b](std::size_t self) {
            grad(a) += m_nodes[self].grad;
            grad(b) += m_nodes[self].grad;
        });
    }

    /// Adds a 1 x n row to every row of a.
    Var add_row(Var a, Var row)
    {
        Mat out = value(a);
        out.rowwise() += value(row).row(0);
        return push(std::move(out), [this, a, row](std::size_t self) {
            Mat const& g = m_nodes[self].grad;
            grad(a) += g;
            grad(row) += g.colwise().sum();
        });
    }

    Var scale(Var a, T s)
    {
        return push(value(a) * s, [this, a, s](std::size_t self) { grad(a) += m_nodes[self].grad * s; });
    }

    Var relu(Var a)
    {
        Mat out = value(a).cwiseMax(T(0));
        return push(std::move(out), [this, a](std::size_t self) {
            Mat const& x = value(a);
            Mat const& g = m_nodes[self].grad;
            Mat& ga = grad(a);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (x.data()[i] > T(0)) {
                    ga.data()[i] += g.data()[i];
                }
            }
        });
    }

    Var softmax(Var a)
    {
        return push(softmax_rows<T>(value(a)), [this, a](std::size_t self) {
            Mat const& y = m_nodes[self].value;
            Mat const& g = m_nodes[self].grad;
            Mat gy = g.cwiseProduct(y);
            Eigen::Matrix<T, Eigen::Dynamic, 1> dots = gy.rowwise().sum();
            Mat d = gy - y.cwiseProduct(dots.replicate(1, y.cols()));
            grad(a) += d;
        });
    }

    /// Rows of a parameter table, e.g. an embedding lookup.
    Var gather_rows(Tensor<T>& table, std::span<std::size_t const> ids)
    {
        Mat out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] >= static_cast<std::size_t>(table.value.rows())) {
                throw ArgumentError("row " + std::to_string(ids[i]) + " outside table '" + table.name + "'");
            }
            out.row(static_cast<Eigen::Index>(i)) = table.value.row(static_cast<Eigen::Index>(ids[i]));
        }
        if (table.grad.rows() != table.value.rows() || table.grad.cols() != table.value.cols()) {
            table.zero_grad();
        }
        std::vector<std::size_t> idx(ids.begin(), ids.end());
        return push(std::move(out), [this, &table, idx = std::move(idx)](std::size_t self) {
            Mat const& g = m_nodes[self].grad;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                table.grad.row(static_cast<Eigen::Index>(idx[i])) += g.row(static_cast<Eigen::Index>(i));
            }
        });
    }

    /// Leading `count` rows of a parameter table (positions 0..count-1).
    Var leading_rows(Tensor<T>& table, std::size_t count)
    {
        std::vector<std::size_t> ids(count);
        for (std::size_t i = 0; i < count; ++i) {
            ids[i] = i;
        }
        return gather_rows(table, ids);
    }

    Var row(Var a, std::size_t r)
    {
        auto ri = static_cast<Eigen::Index>(r);
        return push(value(a).row(ri), [this, a, ri](std::size_t self) {
            grad(a).row(ri) += m_nodes[self].grad.row(0);
        });
    }

    /// Mean of the selected rows, as a 1 x n row.
    Var mean_rows(Var a, std::span<std::size_t const> rows)
    {
        if (rows.empty()) {
            throw ArgumentError("mean over zero rows");
        }
        Mat const& x = value(a);
        Mat out = Mat::Zero(1, x.cols());
        for (auto r : rows) {
            out += x.row(static_cast<Eigen::Index>(r));
        }
        T inv = T(1) / static_cast<T>(rows.size());
        out *= inv;
        std::vector<std::size_t> idx(rows.begin(), rows.end());
        return push(std::move(out), [this, a, inv, idx = std::move(idx)](std::size_t self) {
            Mat& ga = grad(a);
            for (auto r : idx) {
                ga.row(static_cast<Eigen::Index>(r)) += m_nodes[self].grad.row(0) * inv;
            }
        });
    }

    Var mean_all_rows(Var a)
    {
        std::vector<std::size_t> rows(static_cast<std::size_t>(value(a).rows()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i] = i;
        }
        return mean_rows(a, rows);
    }

    /// Vertically stacks 1 x n rows.
    Var stack_rows(std::span<Var const> rows)
    {
        if (rows.empty()) {
            throw ArgumentError("stacking zero rows");
        }
        Mat out(static_cast<Eigen::Index>(rows.size()), value(rows[0]).cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.row(static_cast<Eigen::Index>(i)) = value(rows[i]).row(0);
        }
        std::vector<Var> parts(rows.begin(), rows.end());
        return push(std::move(out), [this, parts = std::move(parts)](std::size_t self) {
            for (std::size_t i = 0; i < parts.size(); ++i) {
                grad(parts[i]).row(0) += m_nodes[self].grad.row(static_cast<Eigen::Index>(i));
            }
        });
    }

    /// Horizontal concatenation of blocks with equal row counts.
    Var concat_cols(std::span<Var const> blocks)
    {
        Eigen::Index rows = value(blocks[0]).rows();
        Eigen::Index cols = 0;
        for (auto b : blocks) {
            if (value(b).rows() != rows) {
                throw ArgumentError("concat_cols: row count mismatch");
            }
            cols += value(b).cols();
        }
        Mat out(rows, cols);
        Eigen::Index c = 0;
        for (auto b : blocks) {
            out.middleCols(c, value(b).cols()) = value(b);
            c += value(b).cols();
        }
        std::vector<Var> parts(blocks.begin(), blocks.end());
        return push(std::move(out), [this, parts = std::move(parts)](std::size_t self) {
            Eigen::Index off = 0;
            for (auto b : parts) {
                auto w = value(b).cols();
                grad(b) += m_nodes[self].grad.middleCols(off, w);
                off += w;
            }
        });
    }

    Var slice_cols(Var a, std::size_t start, std::size_t width)
    {
        auto s = static_cast<Eigen::Index>(start);
        auto w = static_cast<Eigen::Index>(width);
        return push(value(a).middleCols(s, w), [this, a, s, w](std::size_t self) {
            grad(a).middleCols(s, w) += m_nodes[self].grad;
        });
    }

    /// Elementwise product with a constant mask (dropout).
    Var mask(Var a, Mat m)
    {
        Mat out = value(a).cwiseProduct(m);
        return push(std::move(out), [this, a, m = std::move(m)](std::size_t self) {
            grad(a) += m_nodes[self].grad.cwiseProduct(m);
        });
    }

    /// -log softmax(logits)[target] for a 1 x C row of logits; a 1 x 1 result.
    Var cross_entropy(Var logits, std::size_t target)
    {
        Mat const& z = value(logits);
        T mx = z.maxCoeff();
        T sum = 0;
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            sum += std::exp(z(0, c) - mx);
        }
        T loss = mx + std::log(sum) - z(0, static_cast<Eigen::Index>(target));
        Mat out(1, 1);
        out(0, 0) = loss;
        return push(std::move(out), [this, logits, target](std::size_t self) {
            Mat p = softmax_rows<T>(value(logits));
            p(0, static_cast<Eigen::Index>(target)) -= T(1);
            grad(logits) += p * m_nodes[self].grad(0, 0);
        });
    }

    /// Back-propagates d(output)/d(.) with `seed` times the output (1 x 1) as the starting gradient.
    void backward(Var output, T seed = T(1))
    {
        grad(output)(0, 0) += seed;
        for (std::size_t i = output.id + 1; i-- > 0;) {
            auto& n = m_nodes[i];
            if (n.back && n.grad.size() != 0) {
                n.back(i);
            }
        }
    }

  private:
    struct Node {
        Mat value;
        Mat grad;
        Tensor<T>* param = nullptr;
        std::function<void(std::size_t)> back;
    };

    Var push(Mat value, std::function<void(std::size_t)> back)
    {
        Node n;
        n.value = std::move(value);
        n.back = std::move(back);
        m_nodes.push_back(std::move(n));
        return {m_nodes.size() - 1};
    }

    Mat& grad(Var v)
    {
        auto& n = m_nodes[v.id];
        if (n.param != nullptr) {
            return n.param->grad;
        }
        if (n.grad.size() == 0) {
            n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        }
        return n.grad;
    }

    void check_same_shape(Var a, Var b, char const* op) const
    {
        if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
            throw ArgumentError(std::string(op) + ": shape mismatch");
        }
    }

    std::vector<Node> m_nodes;
};

}  // namespace skg::nn
