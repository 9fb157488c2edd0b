// Shapes exchanged with the render service; see docs/api.md.

export interface PoseDict {
  translation: number[];
  rotation_wxyz: number[];
  scale: number;
}

export interface CameraInfo {
  pose: PoseDict;
  fov_deg: number;
  near: number;
  far: number;
  width: number;
  height: number;
}

export interface LightInfo {
  position: number[];
  color: number[];
  intensity: number;
  casts_shadow: boolean;
  role: string;
}

export interface EffectsInfo {
  ssao_enabled: boolean;
  ssao_radius: number | null;
  ssao_samples: number;
  bloom_enabled: boolean;
  bloom_threshold: number;
  bloom_levels: number;
  edl_strength: number;
  tonemap: "aces" | "reinhard" | "none";
  gamma: number;
  background: string;
  background_color: number[];
  shadow_map_size: number;
  seed: number;
}

export interface ObjectInfo {
  name: string;
  mode: string;
  visible: boolean;
  vertices: number;
  lines: boolean;
}

export interface BoundsInfo {
  center: number[];
  radius: number;
}

export interface StateSnapshot {
  camera: CameraInfo;
  lights: LightInfo[];
  effects: EffectsInfo;
  objects: ObjectInfo[];
  bounds: BoundsInfo;
  auto: Record<string, number | boolean>;
  width: number;
  height: number;
  counters: Record<string, number>;
  seq: number;
  digest: string | null;
  keyposes: number;
  recording: boolean;
}

export interface SceneLoadResult {
  objects: string[];
  bounds: BoundsInfo;
  auto: Record<string, number | boolean>;
  seq: number;
  digest: string;
}

export interface PatchResult {
  pointer: string;
  value: unknown;
  seq: number;
  digest: string;
}

export interface OrbitDelta {
  yaw: number;
  pitch: number;
  dolly: number;
}

export interface CameraMove {
  pose?: PoseDict;
  fov_deg?: number;
  yaw?: number;
  pitch?: number;
  dolly?: number;
}

export interface CameraResult {
  camera: CameraInfo;
  seq: number;
  digest: string;
}

export interface KeyposeEntry {
  pose: PoseDict;
  duration: number;
}

export interface KeyposeAddResult {
  count: number;
  pose: PoseDict;
  duration: number;
}

export interface RecordResult {
  frames: number;
  digests: string[];
  archive: string;
}

export interface FrameMessage {
  type: "frame";
  seq: number;
  digest: string;
  format: "png" | "jpeg";
  data: string;
}
