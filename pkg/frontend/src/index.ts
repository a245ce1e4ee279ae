export {
  CONVERGENCE_COLUMNS,
  SCATTER_COLUMNS,
  SchemaError,
  loadConvergenceCsv,
  loadMetadata,
  loadScatterCsv,
} from "./csv.js";
export { renderConvergence, renderErrorScatter } from "./render.js";
export { PlotJob, main, render } from "./cli.js";
