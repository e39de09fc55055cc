#pragma once

#include <optional>

#include "catchplan/drag_fit.hpp"
#include "catchplan/ekf.hpp"
#include "catchplan/target_model.hpp"

namespace catchplan {

// Perception stages for one tracked target. The gate latches: once a stage
// is reached it is never left, even if the target later drops below the
// trigger heights.
enum class SensingStage { None, FilterOnly, FullModel };

struct EstimatorParams {
    EkfParams ekf;
    DragFitParams fit;
    double gate_filter_z = 2.0;  // m, start filtering above this height
    double gate_model_z = 2.8;   // m, fit drag and publish the full model above this
    Vec3 default_drag = Vec3::Zero();  // used until the fit has run
    int window_capacity = 30;
};

// Measurement-to-model pipeline for one target: height gate -> constant-drag
// ballistic filter -> windowed drag fit. Publishes a TargetModel anchored at
// the latest measurement time once the filter is running.
class TargetEstimator {
  public:
    explicit TargetEstimator(const EstimatorParams& prm = {})
        : prm_(prm), window_(prm.window_capacity), drag_(prm.default_drag) {}

    SensingStage stage() const { return stage_; }

    // Feed one (timestamp, position) measurement. Returns the published
    // model if the pipeline is past the gate, nothing otherwise.
    std::optional<TargetModel> feed(double t, const Vec3& z) {
        switch (stage_) {
            case SensingStage::None:
                if (z.z() < prm_.gate_filter_z) return std::nullopt;
                ekf_.x.head<3>() = z;
                ekf_.x.tail<3>().setZero();
                ekf_.P = Mat6::Identity();
                ekf_.P.bottomRightCorner<3, 3>() *= 25.0;  // unknown initial velocity
                stage_ = SensingStage::FilterOnly;
                break;
            case SensingStage::FilterOnly:
            case SensingStage::FullModel:
                ekfStep(ekf_, drag_, t - last_t_, z, prm_.ekf);
                break;
        }
        last_t_ = t;
        window_.push(t, z);

        if (stage_ == SensingStage::FilterOnly && z.z() >= prm_.gate_model_z) {
            stage_ = SensingStage::FullModel;
        }
        if (stage_ == SensingStage::FullModel) {
            // Refit whenever enough data is in the window; keep the previous
            // coefficients otherwise.
            try {
                drag_ = fitDrag(window_, prm_.fit).drag;
            } catch (const InsufficientDataError&) {
            }
        }
        return model();
    }

    std::optional<TargetModel> model() const {
        if (stage_ == SensingStage::None) return std::nullopt;
        TargetModel m;
        m.t0 = last_t_;
        m.s0 = ekf_.pos();
        m.v0 = ekf_.vel();
        m.drag = drag_;
        m.gravity = prm_.ekf.gravity;
        return m;
    }

    const EkfState& filterState() const { return ekf_; }
    const FitWindow& window() const { return window_; }
    const Vec3& dragEstimate() const { return drag_; }

  private:
    EstimatorParams prm_;
    SensingStage stage_ = SensingStage::None;
    EkfState ekf_;
    FitWindow window_;
    Vec3 drag_;
    double last_t_ = 0.0;
};

}  // namespace catchplan
