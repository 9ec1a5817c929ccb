#pragma once

#include "ctrkit/config.hpp"
#include "ctrkit/error.hpp"
#include "ctrkit/evacuation.hpp"
#include "ctrkit/inverse_kinematics.hpp"
#include "ctrkit/io.hpp"
#include "ctrkit/kinematics.hpp"
#include "ctrkit/motor_control.hpp"
#include "ctrkit/numerics.hpp"
#include "ctrkit/phantom.hpp"
#include "ctrkit/registration.hpp"
#include "ctrkit/torsion.hpp"
#include "ctrkit/tube_design.hpp"
#include "ctrkit/tube_shape.hpp"
