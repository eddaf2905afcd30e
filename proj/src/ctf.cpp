// SPDX-License-Identifier: Apache-2.0
//
// subnyq: joint DOA and carrier estimation for sub-Nyquist array receivers
// Copyright (C) 2026 The subnyq authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "subnyq/errors.hpp"
#include "subnyq/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>

namespace subnyq
{
    namespace
    {
        constexpr double kMaxCondition = 1e10;
        constexpr double kResidualStop = 1e-8;
        constexpr double kEigenFloor = 1e-12;

        // Orthonormal basis of the dominant range of X, at most max_rank wide.
        CMatrix range_basis(const CMatrix &X, double abs_tol, Eigen::Index max_rank)
        {
            Eigen::JacobiSVD<CMatrix> svd(X, Eigen::ComputeThinU);
            Eigen::Index r = 0;
            while (r < svd.singularValues().size() && r < max_rank && svd.singularValues()(r) > abs_tol)
                ++r;
            return svd.matrixU().leftCols(r);
        }

        CMatrix orthogonal_complement_projector(const CMatrix &Bs, Eigen::Index n)
        {
            CMatrix P = CMatrix::Identity(n, n);
            if (Bs.cols() == 0)
                return P;
            const CMatrix Qb = Bs.householderQr().householderQ() * CMatrix::Identity(n, Bs.cols());
            return P - Qb * Qb.adjoint();
        }
    }

    CMatrix ls_solve(const CMatrix &A, const CMatrix &Obs)
    {
        if (A.rows() < A.cols())
            throw EstimationError(EstimationFailure::rank_deficient, "least squares with more unknowns than equations");
        if (Obs.rows() != A.rows())
            throw EstimationError(EstimationFailure::size_mismatch, "least squares operands disagree in row count");
        Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto &s = svd.singularValues();
        if (s.size() == 0)
            return CMatrix(0, Obs.cols());
        const double smin = s(s.size() - 1), smax = s(0);
        if (!(smin > 0.0) || smax / smin > kMaxCondition)
            throw EstimationError(EstimationFailure::rank_deficient,
                                  "least squares matrix is rank deficient (cond = " + std::to_string(smax / smin) + ")");
        return svd.solve(Obs);
    }

    SupportSet ctf_support(const CMatrix &Y1, const CMatrix &B, int K)
    {
        if (Y1.rows() != B.rows())
            throw EstimationError(EstimationFailure::size_mismatch, "Y1 and B disagree in row count");
        if (K < 1 || K > B.rows() - 1)
            throw std::invalid_argument("support recovery needs 1 <= K <= P - 1");

        // frame V with V V^H = R, restricted to the numerically positive part
        const CMatrix R = sample_covariance(Y1);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(R);
        const RVector lam = es.eigenvalues().reverse();
        const CMatrix U = es.eigenvectors().rowwise().reverse();
        int r = 0;
        while (r < lam.size() && r < K && lam(r) > kEigenFloor * std::max(lam(0), 0.0))
            ++r;
        const CMatrix V = U.leftCols(r) * lam.head(r).cwiseSqrt().asDiagonal();
        const double vnorm = V.norm();

        const auto P = B.rows();
        const auto L = static_cast<int>(B.cols());
        const double first_corr = r == 0 ? 0.0 : (B.adjoint() * V).rowwise().norm().maxCoeff();
        if (r == 0 || !(first_corr > vnorm * 1e-12))
            throw EstimationError(EstimationFailure::empty_support, "no signal energy in the branch outputs");

        std::vector<int> chosen;
        CMatrix residual = V;
        while (static_cast<int>(chosen.size()) < K)
        {
            const CMatrix basis = range_basis(residual, 1e-10 * vnorm, K - static_cast<Eigen::Index>(chosen.size()));
            if (basis.cols() == 0)
                break;
            CMatrix Bs(P, static_cast<Eigen::Index>(chosen.size()));
            for (std::size_t i = 0; i < chosen.size(); ++i)
                Bs.col(static_cast<Eigen::Index>(i)) = B.col(chosen[i]);
            const CMatrix Pc = orthogonal_complement_projector(Bs, P);

            int best = -1;
            double best_score = -1.0;
            for (int l = 0; l < L; ++l)
            {
                if (std::find(chosen.begin(), chosen.end(), l) != chosen.end())
                    continue;
                const CVector bt = Pc * B.col(l);
                const double bn = bt.norm();
                if (bn < 1e-10 * B.col(l).norm())
                    continue;
                const double score = (basis.adjoint() * bt).norm() / bn;
                if (score > best_score)
                {
                    best_score = score;
                    best = l;
                }
            }
            if (best < 0)
                break;
            chosen.push_back(best);
            Bs.conservativeResize(P, Bs.cols() + 1);
            Bs.col(Bs.cols() - 1) = B.col(best);
            residual = orthogonal_complement_projector(Bs, P) * V;
            if (residual.norm() < kResidualStop * vnorm)
                break;
        }

        std::sort(chosen.begin(), chosen.end());
        return {chosen};
    }
}
