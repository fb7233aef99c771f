#pragma once

#include <cstdlib>
#include <cstring>
#include <new>
#include <utility>

namespace sf {

// 64-byte aligned double buffer, zero-initialized. Alignment keeps the
// vectorized interpreter and emitted kernels on the same footing.
class AlignedBuffer {
public:
    AlignedBuffer() = default;

    explicit AlignedBuffer(size_t n) { allocate(n); }

    AlignedBuffer(const AlignedBuffer& o) { copy_from(o); }
    AlignedBuffer& operator=(const AlignedBuffer& o) {
        if (this != &o) {
            release();
            copy_from(o);
        }
        return *this;
    }

    AlignedBuffer(AlignedBuffer&& o) noexcept : p_(o.p_), n_(o.n_) {
        o.p_ = nullptr;
        o.n_ = 0;
    }
    AlignedBuffer& operator=(AlignedBuffer&& o) noexcept {
        if (this != &o) {
            release();
            p_ = std::exchange(o.p_, nullptr);
            n_ = std::exchange(o.n_, 0);
        }
        return *this;
    }

    ~AlignedBuffer() { release(); }

    void allocate(size_t n) {
        release();
        n_ = n;
        if (n == 0) return;
        size_t bytes = (n * sizeof(double) + 63) / 64 * 64;
        p_ = static_cast<double*>(std::aligned_alloc(64, bytes));
        if (!p_) throw std::bad_alloc();
        std::memset(p_, 0, bytes);
    }

    void zero() {
        if (p_) std::memset(p_, 0, n_ * sizeof(double));
    }

    double* data() { return p_; }
    const double* data() const { return p_; }
    size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    double& operator[](size_t i) { return p_[i]; }
    double operator[](size_t i) const { return p_[i]; }

private:
    void release() {
        std::free(p_);
        p_ = nullptr;
        n_ = 0;
    }
    void copy_from(const AlignedBuffer& o) {
        allocate(o.n_);
        if (o.p_) std::memcpy(p_, o.p_, o.n_ * sizeof(double));
    }

    double* p_ = nullptr;
    size_t n_ = 0;
};

} // namespace sf
