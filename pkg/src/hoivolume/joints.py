"""17-joint body convention shared by every module.

The ordering is the first 17 keypoints of the OpenPose BODY_25 layout, which
is the smallest OpenPose prefix that contains a pelvis (MidHip), both
shoulders and both eyes (used as the pupil joints).
"""

JOINT_NAMES = (
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "pelvis",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
)

NUM_JOINTS = len(JOINT_NAMES)

PELVIS = JOINT_NAMES.index("pelvis")
RIGHT_SHOULDER = JOINT_NAMES.index("right_shoulder")
LEFT_SHOULDER = JOINT_NAMES.index("left_shoulder")
RIGHT_EYE = JOINT_NAMES.index("right_eye")
LEFT_EYE = JOINT_NAMES.index("left_eye")

# Word looked up in the embedding table for each joint's part set.
PART_WORDS = (
    "nose",
    "neck",
    "shoulder",
    "elbow",
    "hand",
    "shoulder",
    "elbow",
    "hand",
    "pelvis",
    "hip",
    "knee",
    "ankle",
    "hip",
    "knee",
    "ankle",
    "eye",
    "eye",
)

# Point-set labels: joint i owns label i + 1, the object sphere owns 18.
OBJECT_LABEL = NUM_JOINTS + 1
NUM_SETS = NUM_JOINTS + 1

NUM_BODY_POINTS = 916
NUM_SPHERE_POINTS = 312
NUM_VOLUME_POINTS = NUM_BODY_POINTS + NUM_SPHERE_POINTS
