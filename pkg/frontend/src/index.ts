export { defaultInputs, FIGURE_IDS, render } from "./figures.js";
export type { FigureId, FigureSpec, SeriesStyle } from "./figures.js";
export {
  InputError,
  readStaFields,
  readSummary,
  readSurface,
  readTrajectory,
  readXi,
  STA_COLUMNS,
  SURFACE_COLUMNS,
  TRAJECTORY_COLUMNS,
  XI_COLUMNS,
} from "./schema.js";
export type { StaRow, Summary, SurfaceRow, TrajectoryRow, XiRow } from "./schema.js";
