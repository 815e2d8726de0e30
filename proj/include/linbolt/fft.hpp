#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace linbolt {

using cplx = std::complex<double>;

// Thin RAII wrapper around FFTW complex transforms of a fixed shape.
// FFTW_ESTIMATE keeps the algorithm choice deterministic run to run,
// which the byte-identical output contract of the CLI relies on.
class Fft {
  public:
    explicit Fft(std::vector<int> shape) : shape_(std::move(shape)) {
        size_ = 1;
        for (int n : shape_) {
            if (n < 1) throw std::invalid_argument("Fft: bad shape");
            size_ *= static_cast<std::size_t>(n);
        }
        buf_ = fftw_alloc_complex(size_);
        if (!buf_) throw std::bad_alloc();
        fwd_ = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(),
                             buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(),
                             buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("Fft: planning failed");
    }
    ~Fft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return size_; }
    const std::vector<int>& shape() const { return shape_; }

    // in-place transforms on caller data; unnormalized like FFTW itself
    void forward(std::complex<double>* data) const { run(fwd_, data); }
    void backward(std::complex<double>* data) const { run(bwd_, data); }

    void forward(std::vector<std::complex<double>>& v) const {
        check(v.size());
        run(fwd_, v.data());
    }
    void backward(std::vector<std::complex<double>>& v) const {
        check(v.size());
        run(bwd_, v.data());
    }

  private:
    void check(std::size_t n) const {
        if (n != size_) throw std::invalid_argument("Fft: size mismatch");
    }
    void run(fftw_plan p, std::complex<double>* data) const {
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

    std::vector<int> shape_;
    std::size_t size_ = 0;
    fftw_complex* buf_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

// signed FFT frequency index: k -> k for k < n/2, else k - n
inline int fft_freq_index(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

} // namespace linbolt
