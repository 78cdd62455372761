//*****************************************************************************
// Copyright 2026 The twostage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************
#pragma once

// InferenceSession backed by the OpenCV DNN module (ONNX and other formats it
// reads). Requires linking opencv_dnn / opencv_core.

#include <filesystem>
#include <mutex>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "twostage/backends/external.hpp"

namespace twostage {

class OpenCvDnnSession final : public InferenceSession {
  public:
    explicit OpenCvDnnSession(const std::filesystem::path &model_path) {
        if (!std::filesystem::is_regular_file(model_path)) {
            throw ConfigError("model artifact not found: " + model_path.string());
        }
        try {
            net_ = cv::dnn::readNet(model_path.string());
        } catch (const cv::Exception &e) {
            throw ConfigError("cannot load model artifact " + model_path.string() + ": " + e.what());
        }
        if (net_.empty()) {
            throw ConfigError("cannot load model artifact " + model_path.string());
        }
        net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
        net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    }

    [[nodiscard]] std::map<std::string, std::vector<float>> run(const std::string &input_name, const Tensor &input,
                                                                const std::vector<std::string> &outputs) const override {
        const int dims[] = {1, input.channels, input.height, input.width};
        // The blob aliases the tensor; setInput copies it into the network.
        cv::Mat blob(4, dims, CV_32F, const_cast<float *>(input.data.data()));
        std::vector<cv::Mat> mats;
        std::vector<cv::String> names(outputs.begin(), outputs.end());
        {
            std::lock_guard lock(mutex_);
            try {
                net_.setInput(blob, input_name);
                net_.forward(mats, names);
            } catch (const cv::Exception &e) {
                throw BackendError(std::string("model execution failed: ") + e.what());
            }
        }
        std::map<std::string, std::vector<float>> result;
        for (std::size_t i = 0; i < outputs.size() && i < mats.size(); ++i) {
            cv::Mat m = mats[i].isContinuous() ? mats[i] : mats[i].clone();
            if (m.depth() != CV_32F) {
                m.convertTo(m, CV_32F);
            }
            const auto *p = m.ptr<float>();
            result[outputs[i]] = std::vector<float>(p, p + m.total() * m.channels());
        }
        return result;
    }

  private:
    mutable cv::dnn::Net net_;
    mutable std::mutex mutex_;
};

inline SessionPtr open_session(const IoSpec &spec) { return std::make_shared<OpenCvDnnSession>(spec.model_path); }

inline DetectorPtr external_detector(const IoSpec &spec) {
    return std::make_shared<ExternalDetector>(open_session(spec), spec);
}

inline ClassifierPtr external_classifier(const IoSpec &spec, std::size_t class_count) {
    return std::make_shared<ExternalClassifier>(open_session(spec), spec, class_count);
}

inline FeatureExtractorPtr external_feature_extractor(const IoSpec &spec) {
    return std::make_shared<ExternalFeatureExtractor>(open_session(spec), spec);
}

} // namespace twostage
